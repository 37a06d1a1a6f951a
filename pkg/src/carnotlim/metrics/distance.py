"""Carnot-Caratheodory distance brackets with exact certificates.

Upper bounds are lengths of explicit horizontal paths whose endpoints
reproduce the queried element exactly; a constructive layer-by-layer
corrector guarantees one always exists, and a seeded rational search
can only shorten it. Lower bounds aggregate certificates: the Euclidean
norm of the abelianized point, an isoperimetric bound in the rank-2
step-2 case, and recursion through registered morphisms whose
horizontal differential is certified nonexpansive by an exact
positive-semidefiniteness test. Both sides are rationals, so
lower <= upper is checked exactly on every query.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import ValidationError
from ..exactnum import PI_LO, format_fraction, sqrt_lower, sqrt_upper
from ..group_ops import bch_multiply, build_morphism
from ..lie_core import AlgebraElement, get_algebra
from ..ratlinalg import is_psd
from ..sampling import SeededSampler, stereographic_unit
from .paths import HorizontalPath


class DistanceBracket:
    """Certified two-sided estimate of a CC distance to the identity."""

    __slots__ = ("lower", "upper", "witness_upper", "lower_certificates")

    def __init__(self, lower, upper, witness_upper=None, lower_certificates=()):
        self.lower = Fraction(lower)
        self.upper = None if upper is None else Fraction(upper)
        self.witness_upper = witness_upper
        self.lower_certificates = tuple(lower_certificates)
        assert self.lower >= 0
        if self.upper is not None:
            assert self.lower <= self.upper, (self.lower, self.upper)

    def merge(self, other):
        lower, certs = self.lower, self.lower_certificates
        if other.lower > lower:
            lower, certs = other.lower, other.lower_certificates
        upper, witness = self.upper, self.witness_upper
        if other.upper is not None and (upper is None or other.upper < upper):
            upper, witness = other.upper, other.witness_upper
        return DistanceBracket(lower, upper, witness, certs)

    def midpoint(self):
        if self.upper is None:
            return float(self.lower)
        return float(self.lower + self.upper) / 2.0

    def to_json(self):
        return {
            "lower": format_fraction(self.lower),
            "upper": None if self.upper is None else format_fraction(self.upper),
            "lower_float": float(self.lower),
            "upper_float": None if self.upper is None else float(self.upper),
            "certificates": list(self.lower_certificates),
            "witness": None
            if self.witness_upper is None
            else self.witness_upper.to_json(),
            "label": "certified-bound",
        }


def _require_cc_algebra(alg):
    if not alg.is_stratified():
        raise ValidationError(
            f"{alg.algebra_id} has generators outside degree one; "
            "no horizontal paths reach a general point"
        )


# ---------------------------------------------------------------------------
# Constructive upper bounds
# ---------------------------------------------------------------------------


def _word_path(alg, word, coeff):
    """Path ending at exp(coeff * word + terms of higher degree).

    Generators are realized by straight segments (exactly). A bracket
    word [u, v] is realized by the group commutator of the paths for
    (u, coeff) and (v, 1): its log is coeff*[u,v] plus brackets of
    degree strictly above degree(word), because every extra term
    involves both factors at least once more.
    """
    if word.is_generator():
        sign = 1 if coeff >= 0 else -1
        direction = AlgebraElement(alg, {word.index: sign})
        return HorizontalPath(alg, [(direction, abs(coeff))])
    left = _word_path(alg, word.left, coeff)
    right = _word_path(alg, word.right, Fraction(1))
    return left.concat(right).concat(left.reverse()).concat(right.reverse())


def canonical_path(x):
    """Exact-endpoint witness path built layer by layer.

    Degree-one coordinates are matched by axis segments; for each
    degree d >= 2, commutator gadgets cancel the remaining degree-d
    coordinates without touching lower degrees. The result's endpoint
    equals x exactly.
    """
    alg = x.algebra
    _require_cc_algebra(alg)
    segments = []
    for g in alg.first_layer_indices():
        c = x.coords.get(g)
        if c:
            direction = AlgebraElement(alg, {g: 1 if c > 0 else -1})
            segments.append((direction, abs(c)))
    path = HorizontalPath(alg, segments)
    top = max(alg.degrees) if alg.degrees else 1
    for degree in range(2, top + 1):
        rem = bch_multiply(path.endpoint().inverse(), x)
        assert rem.vector.degree_part(1).is_zero()
        for w in alg.basis:
            if w.degree != degree:
                continue
            c = rem.coords.get(w.index)
            if c:
                path = path.concat(_word_path(alg, w, c))
    final = bch_multiply(path.endpoint().inverse(), x)
    assert final.is_identity(), "canonical corrector failed to close the path"
    return path


def _abelianized(x):
    return {k: x.coords[k] for k in x.algebra.first_layer_indices() if k in x.coords}


def _snap_direction(alg, floats):
    """Closest-by-chart rational unit vector in the first layer."""
    first = alg.first_layer_indices()
    norm = sum(f * f for f in floats) ** 0.5
    if norm == 0:
        return None
    unit = [f / norm for f in floats]
    if abs(unit[-1] - 1.0) < 1e-12:
        params = [Fraction(0)] * (len(unit) - 1)
    else:
        params = [
            Fraction(u / (1.0 - unit[-1])).limit_denominator(64) for u in unit[:-1]
        ]
    coords = stereographic_unit(params)
    return AlgebraElement(alg, dict(zip(first, coords)))


def _with_repair(alg, lead_segments, x):
    lead = HorizontalPath(alg, lead_segments)
    residual = bch_multiply(lead.endpoint().inverse(), x)
    return lead.concat(canonical_path(residual))


def cc_upper_bound(x, budget=0, candidate_paths=(), seed=0):
    """Shortest certified path found within budget; exact endpoint always.

    Every candidate is repaired by the canonical corrector, so the
    reported length is a true upper bound regardless of search quality.
    Budget 0 returns the best of the constructive path and the supplied
    candidates.
    """
    alg = x.algebra
    _require_cc_algebra(alg)
    best = canonical_path(x)
    best_len = best.length()
    for cand in candidate_paths:
        if not cand.algebra.same_algebra(alg):
            raise ValidationError("candidate path lives in the wrong algebra")
        if cand.endpoint() != x:
            cand = _with_repair(alg, cand.segments, x)
        if cand.length() < best_len:
            best, best_len = cand, cand.length()

    ab = _abelianized(x)
    if ab:
        snapped = _snap_direction(alg, [float(v) for v in ab.values()])
        norm_f = sum(float(v) ** 2 for v in ab.values()) ** 0.5
        dur = Fraction(norm_f).limit_denominator(4096)
        if snapped is not None and dur > 0:
            cand = _with_repair(alg, [(snapped, dur)], x)
            if cand.length() < best_len:
                best, best_len = cand, cand.length()

    sampler = SeededSampler(seed)
    first = alg.first_layer_indices()
    scale = max(best_len, Fraction(1, 32))
    for it in range(budget):
        rng = sampler.rng(it)
        if len(first) > 1:
            coords = stereographic_unit(
                [
                    Fraction(rng.randint(-24, 24), 8)
                    for _ in range(len(first) - 1)
                ]
            )
            direction = AlgebraElement(alg, dict(zip(first, coords)))
        else:
            direction = AlgebraElement(alg, {first[0]: rng.choice((-1, 1))})
        duration = scale * Fraction(rng.randint(1, 32), 32)
        cand = _with_repair(alg, [(direction, duration)], x)
        if cand.length() < best_len:
            best, best_len = cand, cand.length()
    return DistanceBracket(0, best_len, witness_upper=best)


# ---------------------------------------------------------------------------
# Certified lower bounds
# ---------------------------------------------------------------------------

_ROUTE_CACHE = {}


def _certify_one_lipschitz(morphism):
    """Exact horizontal-contraction certificate.

    A graded morphism pushes horizontal paths forward, scaling each
    segment's speed by the first-layer matrix M; it is 1-Lipschitz for
    the CC distances whenever I - M^T M is positive semidefinite, which
    is decided exactly over the rationals.
    """
    m = morphism.first_layer_matrix()
    cols = len(m[0]) if m else 0
    gram = [
        [
            sum(m[r][i] * m[r][j] for r in range(len(m)))
            for j in range(cols)
        ]
        for i in range(cols)
    ]
    test = [
        [
            (Fraction(1) if i == j else Fraction(0)) - gram[i][j]
            for j in range(cols)
        ]
        for i in range(cols)
    ]
    return is_psd(test)


def lower_bound_routes(alg):
    """Registered 1-Lipschitz morphisms out of alg, certified on build."""
    key = alg.algebra_id
    if key in _ROUTE_CACHE:
        return _ROUTE_CACHE[key]
    routes = []
    labels = sorted(alg.label_to_index, key=alg.label_to_index.get)
    if alg.kind == "free" and alg.rank == 2 and alg.step >= 3:
        target = get_algebra("free:2:2")
        routes.append(
            (
                "project-to-step-2",
                build_morphism(alg, target, {"X": {0: 1}, "Y": {1: 1}}),
            )
        )
    if alg.kind == "free" and alg.rank >= 3:
        target = get_algebra(f"free:2:{alg.step}")
        for a in range(alg.rank):
            for b in range(a + 1, alg.rank):
                images = {lab: {} for lab in labels}
                images[labels[a]] = {0: 1}
                images[labels[b]] = {1: 1}
                routes.append(
                    (
                        f"pair-projection:{labels[a]},{labels[b]}",
                        build_morphism(alg, target, images),
                    )
                )
    if alg.kind == "amalgam":
        for k in range(2, alg.param + 1):
            target = get_algebra(f"free:2:{k}")
            images = {lab: {} for lab in labels}
            images["X"] = {0: 1}
            images[f"Y^{k}"] = {1: 1}
            routes.append(
                (f"block-projection:{k}", build_morphism(alg, target, images))
            )
    for name, morphism in routes:
        assert _certify_one_lipschitz(morphism), f"route {name} is not contracting"
    _ROUTE_CACHE[key] = tuple(routes)
    return _ROUTE_CACHE[key]


def _area_lower(x):
    """Isoperimetric lower bound in the rank-2 step-2 group.

    Closing a horizontal curve from the endpoint (a, b, c) back to the
    identity by the straight chord adds no signed area, so the loop
    encloses |c| and its length obeys L >= 2 sqrt(pi |c|); subtracting
    a certified upper estimate of the chord length |(a, b)| gives a
    lower bound for the open curve.
    """
    a = x.coords.get(0, Fraction(0))
    b = x.coords.get(1, Fraction(0))
    c = abs(x.coords.get(2, Fraction(0)))
    if c == 0:
        return Fraction(0)
    chord = sqrt_upper(a * a + b * b)
    return 2 * sqrt_lower(PI_LO * c) - chord


def cc_lower_bound(x):
    """Best certified lower bound for d(e, x); zero is always valid."""
    alg = x.algebra
    best = Fraction(0)
    certs = ("trivial",)
    ab_sq = sum(v * v for v in _abelianized(x).values())
    if ab_sq:
        val = sqrt_lower(ab_sq)
        if val > best:
            best, certs = val, ("abelianization-l2",)
    if alg.algebra_id == "free:2:2":
        val = _area_lower(x)
        if val > best:
            best, certs = val, ("isoperimetric-area",)
    for name, morphism in lower_bound_routes(alg):
        sub = cc_lower_bound(morphism(x))
        if sub.lower > best:
            best = sub.lower
            certs = (name,) + sub.lower_certificates
    return DistanceBracket(best, None, lower_certificates=certs)


# ---------------------------------------------------------------------------
# Combined interface
# ---------------------------------------------------------------------------


def distance_bracket(x, y=None, budget=0, candidate_paths=(), seed=0):
    """Certified bracket for d(x, y) (y defaults to the identity)."""
    target = x if y is None else bch_multiply(x.inverse(), y)
    lower = cc_lower_bound(target)
    upper = cc_upper_bound(
        target, budget=budget, candidate_paths=candidate_paths, seed=seed
    )
    return lower.merge(upper)
