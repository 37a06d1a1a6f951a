"""Group law, dilations, first-layer test, morphisms.

The product is validated against an independent oracle: the logarithm
of exp(x)exp(y) computed in the truncated free associative algebra, plus
the closed-form Heisenberg law. Group and dilation axioms are exercised
as hypothesis properties because every identity is exact.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnotlim import (
    Dilation,
    GroupElement,
    InputFormatError,
    ValidationError,
    abelian_algebra,
    amalgam_algebra,
    bch_multiply,
    bch_series,
    build_morphism,
    check_abelian_banach_equivalence,
    compose,
    dilate,
    first_layer_membership,
    free_nilpotent_algebra,
    get_algebra,
    identity,
    identity_morphism,
)
from carnotlim.group_ops import _SERIES_CACHE

from oracles import bch_in_word_algebra, heisenberg_product, lie_element_image

HEIS = get_algebra("free:2:2")


def random_element(alg, rng, span=6):
    coords = {
        k: Fraction(rng.randint(-span, span), rng.randint(1, 4))
        for k in range(alg.dim)
        if rng.random() < 0.8
    }
    return GroupElement(alg, coords)


def as_word_poly(x):
    alg = x.algebra
    labels = sorted(alg.label_to_index, key=alg.label_to_index.get)
    slots = {lab: pos for pos, lab in enumerate(labels)}
    return lie_element_image(x.coords, alg.basis, alg.rank, alg.step, slots)


# -- the multiplication itself -------------------------------------------------


def test_bch_series_low_degree_coefficients_frozen():
    series = bch_series(4)
    by_name = {w.name: c for w, c in series}
    assert by_name == {
        "X": Fraction(1),
        "Y": Fraction(1),
        "[X,Y]": Fraction(1, 2),
        "[X,[X,Y]]": Fraction(1, 12),
        "[Y,[X,Y]]": Fraction(-1, 12),
        "[Y,[X,[X,Y]]]": Fraction(-1, 24),
    }


@pytest.mark.parametrize("alg_id", ["free:2:3", "free:2:4", "free:3:3"])
def test_bch_matches_word_algebra_oracle(alg_id):
    alg = get_algebra(alg_id)
    rng = random.Random(20240 + alg.dim)
    for _ in range(12):
        x = random_element(alg, rng, span=3)
        y = random_element(alg, rng, span=3)
        product = bch_multiply(x, y)
        expected = bch_in_word_algebra(as_word_poly(x), as_word_poly(y))
        assert as_word_poly(product) == expected


def test_bch_on_amalgam_matches_block_projections():
    """The amalgam law, checked through its separating block projections.

    The linear projection onto the block of Y^k (X -> X, block words by
    position, everything else -> 0) is built by hand here; the family is
    jointly injective because every basis word is X or lies in exactly
    one block, so agreement under every projection pins the product.
    """
    alg = get_algebra("amalgam:3")
    rng = random.Random(99)
    covered = {0}
    projections = {}
    for k, block in alg.blocks.items():
        indices = [0] + sorted(block, key=lambda i: (alg.basis[i].degree, i))
        covered.update(block)
        projections[k] = {amalgam_i: free_i for free_i, amalgam_i in enumerate(indices)}
    assert covered == set(range(alg.dim))
    for _ in range(10):
        x = random_element(alg, rng, span=3)
        y = random_element(alg, rng, span=3)
        product = bch_multiply(x, y)
        for k, pos in projections.items():
            blk = get_algebra(f"free:2:{k}")

            def project(g):
                coords = {pos[i]: c for i, c in g.coords.items() if i in pos}
                return lie_element_image(
                    coords, blk.basis, 2, k, {"X": 0, "Y": 1}
                )

            expected = bch_in_word_algebra(project(x), project(y))
            assert project(product) == expected


def test_heisenberg_unit_product():
    x = GroupElement(HEIS, {0: 1})
    y = GroupElement(HEIS, {1: 1})
    assert (x * y).coords == {0: 1, 1: 1, 2: Fraction(1, 2)}


@given(
    st.tuples(*[st.fractions(min_value=-5, max_value=5, max_denominator=8)] * 3),
    st.tuples(*[st.fractions(min_value=-5, max_value=5, max_denominator=8)] * 3),
)
def test_heisenberg_matches_closed_form(p, q):
    x = GroupElement(HEIS, dict(enumerate(p)))
    y = GroupElement(HEIS, dict(enumerate(q)))
    expected = heisenberg_product(p, q)
    got = (x * y).coords
    assert tuple(got.get(k, Fraction(0)) for k in range(3)) == expected


def test_conjugate_of_dilated_generator():
    # e^{-X} e^{Y} e^{X} in Heisenberg lands at (0, 1, -1)
    x = GroupElement(HEIS, {0: 1})
    y = GroupElement(HEIS, {1: 1})
    out = x.inverse() * y * x
    assert out.coords == {1: 1, 2: -1}


@pytest.mark.parametrize("alg_id", ["free:2:4", "amalgam:2", "abelian:1:2"])
def test_group_axioms_sampled(alg_id):
    alg = get_algebra(alg_id)
    rng = random.Random(7)
    e = identity(alg)
    for _ in range(30):
        x = random_element(alg, rng)
        y = random_element(alg, rng)
        z = random_element(alg, rng)
        assert (x * y) * z == x * (y * z)
        assert x * e == x and e * x == x
        assert x * x.inverse() == e
        assert x.inverse().coords == {k: -v for k, v in x.coords.items()}


def test_multiply_rejects_mismatched_algebras():
    with pytest.raises(ValidationError):
        bch_multiply(identity(HEIS), identity(get_algebra("free:2:3")))


def test_series_disk_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("CARNOTLIM_CACHE_DIR", str(tmp_path))
    fresh = dict(_SERIES_CACHE)
    _SERIES_CACHE.clear()
    try:
        first = bch_series(3)
        assert (tmp_path / "bch-step-3.json").exists()
        _SERIES_CACHE.clear()
        second = bch_series(3)
        assert [(w.name, c) for w, c in first] == [(w.name, c) for w, c in second]
    finally:
        _SERIES_CACHE.clear()
        _SERIES_CACHE.update(fresh)


# -- dilations -----------------------------------------------------------------


scalars = st.fractions(min_value=-4, max_value=4, max_denominator=6)


def heis_elements():
    return st.tuples(scalars, scalars, scalars).map(
        lambda t: GroupElement(HEIS, dict(enumerate(t)))
    )


def test_dilation_basics():
    x = GroupElement(HEIS, {0: 1, 1: 1, 2: Fraction(1, 2)})
    assert dilate(0, x).is_identity()
    assert dilate(2, x).coords == {0: 2, 1: 2, 2: 2}
    d = Dilation(Fraction(1, 3))
    assert d.compose(Dilation(3)).parameter == 1


@given(heis_elements(), scalars, scalars)
def test_dilation_composition(x, lam, mu):
    assert dilate(lam, dilate(mu, x)) == dilate(lam * mu, x)


@given(heis_elements(), heis_elements(), scalars)
def test_dilation_is_automorphism(x, y, lam):
    assert dilate(lam, x * y) == dilate(lam, x) * dilate(lam, y)


def test_weighted_abelian_dilation():
    line = get_algebra("abelian:1:2")
    x = GroupElement(line, {0: Fraction(3, 2)})
    assert dilate(Fraction(1, 2), x).coords == {0: Fraction(3, 8)}


# -- first layer -----------------------------------------------------------------


def test_first_layer_membership_heisenberg():
    assert first_layer_membership(GroupElement(HEIS, {0: 2, 1: -3}))
    assert not first_layer_membership(GroupElement(HEIS, {2: 1}))
    assert first_layer_membership(identity(HEIS))


@given(heis_elements(), scalars, scalars)
def test_first_layer_dilation_identity(x, t, s):
    if first_layer_membership(x):
        assert dilate(t + s, x) == dilate(t, x) * dilate(s, x)
        assert dilate(-1, x) == x.inverse()


def test_first_layer_scaled_line_is_origin_only():
    line = get_algebra("abelian:1:2")
    assert first_layer_membership(identity(line))
    assert not first_layer_membership(GroupElement(line, {0: 1}))


def test_first_layer_negative_witness_per_word():
    alg = get_algebra("free:2:4")
    for w in alg.basis:
        if w.degree >= 2:
            unit = GroupElement(alg, {w.index: 1})
            assert not first_layer_membership(unit)
            assert dilate(2, unit) != unit * unit


# -- morphisms --------------------------------------------------------------------


def test_amalgam_inclusion_chain_functorial():
    a1, a2, a3 = amalgam_algebra(1), amalgam_algebra(2), amalgam_algebra(3)

    def inclusion(src, dst):
        return build_morphism(
            src, dst, {lab: dst.generator(lab) for lab in src.label_to_index}
        )

    i12 = inclusion(a1, a2)
    i23 = inclusion(a2, a3)
    i13 = inclusion(a1, a3)
    composed = compose(i23, i12)
    assert [v.coords for v in composed.word_images] == [
        v.coords for v in i13.word_images
    ]


def test_projection_kills_top_degree():
    src = free_nilpotent_algebra(2, 3)
    dst = free_nilpotent_algebra(2, 2)
    proj = build_morphism(src, dst, {"X": {0: 1}, "Y": {1: 1}})
    for w in src.basis:
        img = proj.word_images[w.index]
        if w.degree > dst.step:
            assert img.is_zero()
        else:
            assert not img.is_zero()


def test_morphism_rejects_non_first_layer_image():
    alg = free_nilpotent_algebra(2, 2)
    with pytest.raises(ValidationError, match="first layer"):
        build_morphism(alg, alg, {"X": {0: 1}, "Y": {2: 1}})


def test_morphism_rejects_non_homomorphic_images():
    ab = abelian_algebra(2)
    with pytest.raises(ValidationError, match="bracket preservation"):
        build_morphism(ab, HEIS, {"X": {0: 1}, "Y": {1: 1}})


def test_abelianization_is_valid_morphism():
    proj = build_morphism(HEIS, abelian_algebra(2), {"X": {0: 1}, "Y": {1: 1}})
    img = proj(GroupElement(HEIS, {0: 1, 1: 2, 2: 5}))
    assert img.coords == {0: 1, 1: 2}


@given(heis_elements(), scalars)
def test_morphism_commutes_with_dilations(x, lam):
    proj = build_morphism(HEIS, abelian_algebra(2), {"X": {0: 1}, "Y": {1: 1}})
    assert proj(dilate(lam, x)) == dilate(lam, proj(x))


@given(heis_elements(), heis_elements())
def test_morphism_is_group_homomorphism(x, y):
    proj = build_morphism(HEIS, abelian_algebra(2), {"X": {0: 1}, "Y": {1: 1}})
    assert proj(x * y) == proj(x) * proj(y)


def test_identity_morphism_fixes_basis():
    alg = free_nilpotent_algebra(2, 3)
    ident = identity_morphism(alg)
    for k, img in enumerate(ident.word_images):
        assert img.coords == {k: 1}


# -- equivalence report ------------------------------------------------------------


def test_equivalence_report_abelian_cases():
    for alg in (free_nilpotent_algebra(2, 1), amalgam_algebra(1)):
        rep = check_abelian_banach_equivalence(alg)
        assert rep["first_layer_generates"]
        assert rep["v1_equals_group"] and rep["step_is_one"]
        assert rep["law_is_addition"] and rep["consistent"]


def test_equivalence_report_heisenberg():
    rep = check_abelian_banach_equivalence(HEIS)
    assert rep["first_layer_generates"]
    assert not rep["v1_equals_group"]
    assert not rep["step_is_one"]
    assert not rep["law_is_addition"]
    assert rep["consistent"]


def test_equivalence_report_scaled_line_precondition_fails():
    rep = check_abelian_banach_equivalence(get_algebra("abelian:1:2"))
    assert not rep["first_layer_generates"]
    assert rep["consistent"] is None
    assert rep["law_is_addition"] and not rep["v1_equals_group"]


# -- serialization -------------------------------------------------------------------


def test_element_json_round_trip():
    x = GroupElement(HEIS, {0: Fraction(1, 3), 2: Fraction(-7, 2)})
    doc = x.to_json()
    assert doc == {
        "algebra_id": "free:2:2",
        "coords": [[0, "1/3"], [2, "-7/2"]],
    }
    assert GroupElement.from_json(doc) == x


def test_element_json_errors():
    with pytest.raises(InputFormatError):
        GroupElement.from_json({"coords": []})
    with pytest.raises(InputFormatError):
        GroupElement.from_json({"algebra_id": "free:2:2", "coords": [[0, "x"]]})


@settings(max_examples=25)
@given(heis_elements())
def test_element_json_round_trip_random(x):
    assert GroupElement.from_json(x.to_json()) == x
