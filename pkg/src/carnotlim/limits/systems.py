"""Direct systems of scalable groups over a chain index, and their colimit.

A system stores per-level algebras plus connector morphisms between
consecutive levels; composite connectors are derived. Explicitly given
non-adjacent connectors are checked against the composites and any
non-commuting triangle is reported by its (i, j, k) indices. Every
connector must be nonexpansive for the selected backend: the box
constant is computed exactly and the CC property is certified by the
first-layer positive-semidefiniteness test. Connectors that carry an
exact retraction (rho o phi = id with both maps nonexpansive) are
flagged isometric; only then are truncated infima over levels sound
for the infinite tail, and reports say which case they are in.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import InputFormatError, ValidationError
from ..exactnum import format_fraction
from ..group_ops import (
    GroupElement,
    bch_multiply,
    build_morphism,
    compose,
    identity_morphism,
)
from ..lie_core import get_algebra
from ..metrics.distance import (
    _certify_one_lipschitz,
    distance_bracket,
)
from ..metrics.quasinorm import box_distance, box_lipschitz
from ..ratlinalg import solve
from ..sampling import SeededSampler


class DirectSystem:
    """Validated chain of groups with nonexpansive connector morphisms."""

    def __init__(self, algebras, adjacent, backend, isometric_flags):
        self.algebras = tuple(algebras)
        self.adjacent = tuple(adjacent)
        self.backend = backend
        self.isometric_flags = tuple(isometric_flags)
        self._composites = {}

    @property
    def depth(self):
        return len(self.algebras)

    def level_algebra(self, level):
        if not 1 <= level <= self.depth:
            raise ValidationError(
                f"level {level} outside the truncated chain 1..{self.depth}"
            )
        return self.algebras[level - 1]

    def connector(self, i, j):
        """Composite morphism from level i to level j >= i."""
        if not 1 <= i <= j <= self.depth:
            raise ValidationError(f"bad connector request ({i}, {j})")
        if i == j:
            key = (i, i)
            if key not in self._composites:
                self._composites[key] = identity_morphism(self.level_algebra(i))
            return self._composites[key]
        key = (i, j)
        if key not in self._composites:
            morphism = self.adjacent[i - 1]
            for mid in range(i + 1, j):
                morphism = compose(self.adjacent[mid - 1], morphism)
            self._composites[key] = morphism
        return self._composites[key]

    def all_isometric(self):
        return all(self.isometric_flags)

    def tail_status(self):
        return (
            "isometric-constant" if self.all_isometric() else "nonincreasing-evidence"
        )

    def element(self, level, coords):
        return ColimitElement(self, level, GroupElement(self.level_algebra(level), coords))

    def identity_element(self):
        return ColimitElement(self, 1, GroupElement.identity(self.level_algebra(1)))

    def step_profile(self):
        return tuple(alg.step for alg in self.algebras)


class ColimitElement:
    """Element of the algebraic colimit: a representative at some level.

    Equality is pushforward equality at the join level. With injective
    connectors a canonical form exists: the smallest level where the
    representative has an exact preimage.
    """

    __slots__ = ("system", "level", "representative", "canonical")

    def __init__(self, system, level, representative, canonical=False):
        if not representative.algebra.same_algebra(system.level_algebra(level)):
            raise ValidationError(
                f"representative algebra does not match level {level}"
            )
        self.system = system
        self.level = level
        self.representative = representative
        self.canonical = canonical

    def push(self, level):
        if level < self.level:
            raise ValidationError("cannot push a representative downward")
        morphism = self.system.connector(self.level, level)
        return ColimitElement(self.system, level, morphism(self.representative))

    def join_level(self, other):
        return max(self.level, other.level)

    def __eq__(self, other):
        if not isinstance(other, ColimitElement) or other.system is not self.system:
            return NotImplemented
        j = self.join_level(other)
        return self.push(j).representative == other.push(j).representative

    def __hash__(self):
        return hash(self.push(self.system.depth).representative)

    def is_identity(self):
        return self.representative.is_identity()

    def multiply(self, other):
        j = self.join_level(other)
        return ColimitElement(
            self.system,
            j,
            bch_multiply(self.push(j).representative, other.push(j).representative),
        )

    def inverse(self):
        return ColimitElement(self.system, self.level, self.representative.inverse())

    def canonical_form(self):
        """Smallest-level representative with an exact connector preimage."""
        for i in range(1, self.level):
            morphism = self.system.connector(i, self.level)
            mat = morphism.matrix()
            rhs = [
                self.representative.coords.get(r, Fraction(0))
                for r in range(morphism.target.dim)
            ]
            sol = solve(mat, rhs)
            if sol is None:
                continue
            candidate = GroupElement(
                morphism.source, dict(enumerate(sol))
            )
            if morphism(candidate) == self.representative:
                return ColimitElement(self.system, i, candidate, canonical=True)
        return ColimitElement(
            self.system, self.level, self.representative, canonical=True
        )

    def __repr__(self):
        return f"ColimitElement(level={self.level}, {self.representative!r})"


def _positional_images(src, dst, scale=Fraction(1)):
    """Match generators by position; used by the chain presets."""
    src_labels = sorted(src.label_to_index, key=src.label_to_index.get)
    dst_first = dst.first_layer_indices()
    images = {}
    for pos, lab in enumerate(src_labels):
        images[lab] = {dst_first[pos]: scale}
    return images


def _coerce_images(images):
    """JSON image dicts carry string keys and rational literals."""
    return {
        lab: {int(k): Fraction(v) for k, v in dict(img).items()}
        for lab, img in images.items()
    }


def _try_retraction(morphism):
    """Exact retraction certificate for label-selection connectors."""
    src, dst = morphism.source, morphism.target
    hit = {}
    for lab, img in morphism.generator_images.items():
        items = list(img.coords.items())
        if len(items) != 1 or items[0][1] != 1:
            return False
        tgt_idx = items[0][0]
        if tgt_idx in hit:
            return False
        hit[tgt_idx] = lab
    images = {}
    for tlab, tidx in dst.label_to_index.items():
        if tidx in hit:
            images[tlab] = {src.label_to_index[hit[tidx]]: Fraction(1)}
        else:
            images[tlab] = {}
    try:
        retraction = build_morphism(dst, src, images)
    except ValidationError:
        return False
    composite = compose(retraction, morphism)
    identity = identity_morphism(src)
    if [v.coords for v in composite.word_images] != [
        v.coords for v in identity.word_images
    ]:
        return False
    return _certify_one_lipschitz(retraction) and _certify_one_lipschitz(morphism)


def build_direct_system(spec):
    """Validate and build a DirectSystem from a JSON-style description.

    Expected shape: {"levels": [algebra ids or {"algebra": id}],
    "connectors": [{"from": i, "to": j, "images": {label: coords}}],
    "backend": "box"|"cc"}. Connectors between consecutive levels may
    be omitted, in which case generators are matched by position.
    Non-adjacent connectors are compared with the composite of the
    adjacent ones; disagreement raises an error naming the triangle.
    """
    try:
        level_specs = list(spec["levels"])
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"system spec needs levels: {exc}") from exc
    if not level_specs:
        raise InputFormatError("system spec has no levels")
    backend = spec.get("backend", "box")
    if backend not in ("box", "cc"):
        raise InputFormatError(f"unknown backend {backend!r}")
    algebras = []
    for entry in level_specs:
        alg_id = entry["algebra"] if isinstance(entry, dict) else entry
        algebras.append(get_algebra(str(alg_id)))

    given = {}
    for row in spec.get("connectors", ()):
        try:
            i, j = int(row["from"]), int(row["to"])
            images = dict(row["images"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed connector row {row!r}") from exc
        if not 1 <= i < j <= len(algebras):
            raise ValidationError(f"connector ({i}, {j}) outside the chain")
        given[(i, j)] = images

    adjacent = []
    for i in range(1, len(algebras)):
        src, dst = algebras[i - 1], algebras[i]
        images = given.get((i, i + 1)) or _positional_images(src, dst)
        adjacent.append(build_morphism(src, dst, _coerce_images(images)))

    isometric_flags = [_try_retraction(m) for m in adjacent]
    for idx, morphism in enumerate(adjacent, start=1):
        if backend == "box":
            constant = box_lipschitz(morphism)
            if constant > Fraction(1):
                raise ValidationError(
                    f"connector {idx}->{idx + 1} has box constant "
                    f"{constant!r} > 1"
                )
        else:
            if not _certify_one_lipschitz(morphism):
                raise ValidationError(
                    f"connector {idx}->{idx + 1} is not CC-nonexpansive"
                )

    system = DirectSystem(algebras, adjacent, backend, isometric_flags)

    for (i, j), images in given.items():
        if j == i + 1:
            continue
        direct = build_morphism(algebras[i - 1], algebras[j - 1], _coerce_images(images))
        for mid in range(i + 1, j):
            composite = compose(system.connector(mid, j), system.connector(i, mid))
            if [v.coords for v in composite.word_images] != [
                v.coords for v in direct.word_images
            ]:
                raise ValidationError(
                    f"connector triangle ({i}, {mid}, {j}) does not commute"
                )
        system._composites[(i, j)] = direct
    return system


# ---------------------------------------------------------------------------
# Chain presets used by the CLI, the reproduction scripts, and tests
# ---------------------------------------------------------------------------


def filtration_system(depth, step=3, backend="box"):
    """Rank-growing fixed-step chain: free(2,step) in free(3,step) in ...

    Realizes a filtration of a bounded-step group by homogeneous
    subgroups; the generator-subset inclusions are isometric for both
    backends.
    """
    levels = [f"free:{1 + k}:{step}" for k in range(1, depth + 1)]
    return build_direct_system({"levels": levels, "backend": backend})


def amalgam_system(depth, backend="box"):
    """The growing-step chain g_1 in g_2 in ... of block amalgams."""
    levels = [f"amalgam:{k}" for k in range(1, depth + 1)]
    return build_direct_system({"levels": levels, "backend": backend})


def abelian_system(depth, backend="box"):
    """Rank-growing abelian chain; every operation is Euclidean."""
    levels = [f"free:{1 + k}:1" for k in range(1, depth + 1)]
    return build_direct_system({"levels": levels, "backend": backend})


def contracting_system(depth, step=3, backend="box", factor=Fraction(1, 2)):
    """Filtration chain with connectors scaled by a contraction factor.

    Still a valid system (connectors stay nonexpansive) but pushing an
    element up the chain shrinks it geometrically, so the infimum
    pseudodistance to the identity vanishes on every element: the
    canonical degenerate Z(d') example.
    """
    spec = {"levels": [f"free:{1 + k}:{step}" for k in range(1, depth + 1)],
            "backend": backend, "connectors": []}
    for i in range(1, depth):
        src = get_algebra(spec["levels"][i - 1])
        dst = get_algebra(spec["levels"][i])
        images = _positional_images(src, dst, scale=Fraction(factor))
        spec["connectors"].append(
            {
                "from": i,
                "to": i + 1,
                "images": {
                    lab: {k: format_fraction(v) for k, v in img.items()}
                    for lab, img in images.items()
                },
            }
        )
    return build_direct_system(spec)


SYSTEM_PRESETS = {
    "filtration": filtration_system,
    "amalgam": amalgam_system,
    "abelian": abelian_system,
    "contracting": contracting_system,
}


def preset_system(name, depth, backend="box"):
    if name not in SYSTEM_PRESETS:
        raise InputFormatError(
            f"unknown system preset {name!r}; choose from "
            f"{sorted(SYSTEM_PRESETS)}"
        )
    return SYSTEM_PRESETS[name](depth, backend=backend)


# ---------------------------------------------------------------------------
# Infimum pseudodistance and the zero set
# ---------------------------------------------------------------------------


def _level_distance(system, level, a, b, budget=0):
    if system.backend == "box":
        return box_distance(a, b)
    return distance_bracket(a, b, budget=budget)


def infimum_pseudodistance(system, x, y, K=None, budget=0):
    """Per-level distance sequence from the join level up to K.

    Connectors are nonexpansive, so the sequence is nonincreasing and
    the running infimum is its last value. When every connector is
    certified isometric the sequence is constant, which is asserted
    exactly under the box backend; only in that case does the truncated
    infimum equal the infimum over the infinite tail.
    """
    K = system.depth if K is None else K
    join = x.join_level(y)
    if K < join:
        raise ValidationError(
            f"truncation level {K} is below the join level {join}"
        )
    values = []
    for k in range(join, K + 1):
        xk = x.push(k).representative
        yk = y.push(k).representative
        values.append((k, _level_distance(system, k, xk, yk, budget=budget)))
    if system.backend == "box":
        seq = [v for _, v in values]
        for prev, nxt in zip(seq, seq[1:]):
            assert nxt <= prev, "connector failed to be nonexpansive"
        if system.all_isometric():
            assert all(v == seq[0] for v in seq), (
                "isometric connectors must give a constant sequence"
            )
        infimum = seq[-1] if seq else None
    else:
        infimum = values[-1][1] if values else None
    return {
        "join": join,
        "K": K,
        "backend": system.backend,
        "values": values,
        "infimum": infimum,
        "tail_status": system.tail_status(),
    }


def zero_set_probe(system, K=None, budget=24, seed=0, tolerance=Fraction(1, 10**6)):
    """Search sampled nonidentity elements for vanishing pseudodistance.

    Evidence only: a candidate is reported when the per-level distance
    sequence decays geometrically (consistent ratio < 1) or drops below
    the tolerance, which is exactly the behavior of contracting chains.
    Isometric systems report no candidates because their sequences are
    constant and bounded below by the certified level-1 value.
    """
    K = system.depth if K is None else K
    sampler = SeededSampler(seed)
    e = system.identity_element()
    candidates = []
    checked = 0
    for idx in range(budget):
        level = 1 + sampler.rng(idx).randrange(system.depth)
        rep = sampler.element(system.level_algebra(level), idx, span=2, den=4)
        x = ColimitElement(system, level, rep)
        if x.is_identity():
            continue
        checked += 1
        report = infimum_pseudodistance(system, x, e, K=K)
        seq = [v for _, v in report["values"]]
        if system.backend == "cc":
            floats = [float(v.upper) for v in seq]
        else:
            floats = [float(v) for v in seq]
        if not floats:
            continue
        vanishing = floats[-1] < float(tolerance)
        decaying = (
            len(floats) >= 3
            and floats[0] > 0
            and all(b < a for a, b in zip(floats, floats[1:]))
            and floats[-1] <= floats[0] / 4
        )
        if vanishing or decaying:
            candidates.append(
                {
                    "level": level,
                    "coords": rep.to_json()["coords"],
                    "sequence": floats,
                    "reason": "below-tolerance" if vanishing else "geometric-decay",
                }
            )
    return {
        "checked": checked,
        "K": K,
        "tolerance": format_fraction(tolerance),
        "candidates": candidates,
        "tail_status": system.tail_status(),
        "label": "evidence",
    }
