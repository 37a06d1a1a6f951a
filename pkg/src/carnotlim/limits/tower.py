"""Inverse towers of scalable groups with the sup metric on lifts.

A tower runs projections downward: level j maps onto level i for
i <= j. Elements are compatible tuples (one component per level, each
the projection of the one above); sup_distance takes the maximum of the
per-level distances, exact under the box backend and as a two-sided
bracket under cc. Since projections are nonexpansive the per-level
distances are nondecreasing in the level, so a truncated sup is a
certified lower bound for the sup over any deeper truncation.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import InputFormatError, ValidationError
from ..exactnum import format_fraction
from ..group_ops import GroupElement, build_morphism, compose
from ..lie_core import get_algebra
from ..metrics.distance import _certify_one_lipschitz, distance_bracket
from ..metrics.quasinorm import box_distance, box_lipschitz
from .systems import _coerce_images


class InverseTower:
    """Chain of algebras with validated projection morphisms."""

    def __init__(self, algebras, adjacent_projections, backend):
        self.algebras = tuple(algebras)
        self.adjacent = tuple(adjacent_projections)
        self.backend = backend
        self._composites = {}

    @property
    def depth(self):
        return len(self.algebras)

    def level_algebra(self, level):
        if not 1 <= level <= self.depth:
            raise ValidationError(
                f"level {level} outside the tower 1..{self.depth}"
            )
        return self.algebras[level - 1]

    def projection(self, j, i):
        """Composite projection from level j down to level i <= j."""
        if not 1 <= i <= j <= self.depth:
            raise ValidationError(f"bad projection request ({j}, {i})")
        key = (j, i)
        if key not in self._composites:
            morphism = None
            for k in range(j - 1, i - 1, -1):
                step = self.adjacent[k - 1]
                morphism = step if morphism is None else compose(step, morphism)
            self._composites[key] = morphism
        return self._composites[key]

    def lift(self, top):
        """Compatible tuple determined by a top-level element."""
        if not top.algebra.same_algebra(self.algebras[-1]):
            raise ValidationError("lift needs an element of the top level")
        components = []
        for i in range(1, self.depth):
            components.append(self.projection(self.depth, i)(top))
        components.append(top)
        return TowerElement(self, components)


class TowerElement:
    """Compatible tuple: component i is the projection of component i+1."""

    __slots__ = ("tower", "components")

    def __init__(self, tower, components):
        components = tuple(components)
        if len(components) != tower.depth:
            raise ValidationError(
                f"expected {tower.depth} components, got {len(components)}"
            )
        for i, comp in enumerate(components, start=1):
            if not comp.algebra.same_algebra(tower.level_algebra(i)):
                raise ValidationError(f"component {i} lives in the wrong algebra")
        for i in range(1, tower.depth):
            projected = tower.adjacent[i - 1](components[i])
            if projected != components[i - 1]:
                raise ValidationError(
                    f"components ({i}, {i + 1}) are incompatible: projection "
                    "of the upper one differs from the lower one"
                )
        self.tower = tower
        self.components = components

    @classmethod
    def identity(cls, tower):
        return cls(
            tower,
            [GroupElement.identity(tower.level_algebra(i)) for i in range(1, tower.depth + 1)],
        )

    def __eq__(self, other):
        if not isinstance(other, TowerElement) or other.tower is not self.tower:
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)


def sup_distance(tower, a, b, budget=0, candidate_paths=None):
    """Sup of the per-level distances along the truncated tower.

    Box backend: exact values and an exact sup. CC backend: per-level
    brackets whose maxima bracket the sup; `candidate_paths` may map a
    level to witness paths for its bracket. Nonexpansive projections
    make the per-level sequence nondecreasing, so the reported sup is
    also a certified lower bound for any deeper truncation.
    """
    candidate_paths = candidate_paths or {}
    per_level = []
    for i in range(1, tower.depth + 1):
        x, y = a.components[i - 1], b.components[i - 1]
        if tower.backend == "box":
            per_level.append(box_distance(x, y))
        else:
            per_level.append(
                distance_bracket(
                    x, y, budget=budget,
                    candidate_paths=tuple(candidate_paths.get(i, ())),
                )
            )
    if tower.backend == "box":
        sup = per_level[0]
        for value in per_level[1:]:
            assert value >= sup, "projection failed to be nonexpansive"
            sup = value
        return {
            "backend": "box",
            "per_level": [v.to_json() for v in per_level],
            "sup": sup.to_json(),
            "finite_at_truncation": True,
            "lower_bound_for_deeper_truncations": True,
            "label": "exact",
        }
    lower = max(b.lower for b in per_level)
    upper = max(b.upper for b in per_level)
    return {
        "backend": "cc",
        "per_level": [b.to_json() for b in per_level],
        "sup": {"lower": format_fraction(lower), "upper": format_fraction(upper)},
        "sup_lower": lower,
        "sup_upper": upper,
        "finite_at_truncation": True,
        "lower_bound_for_deeper_truncations": True,
        "label": "certified-bound",
    }


def build_inverse_tower(spec):
    """Build and validate an InverseTower from a JSON-style description.

    Shape: {"levels": [...], "connectors": [{"from": j, "to": i,
    "images": ...}], "backend": ...} with connectors running downward
    (from = to + 1 for the adjacent ones). Omitted adjacent projections
    default to truncation: generators match by position and surplus
    generators of the upper level map to zero. Non-adjacent connectors
    are checked against composites; failures name the triangle.
    """
    try:
        level_specs = list(spec["levels"])
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"tower spec needs levels: {exc}") from exc
    if not level_specs:
        raise InputFormatError("tower spec has no levels")
    backend = spec.get("backend", "box")
    if backend not in ("box", "cc"):
        raise InputFormatError(f"unknown backend {backend!r}")
    algebras = [
        get_algebra(str(e["algebra"] if isinstance(e, dict) else e))
        for e in level_specs
    ]

    given = {}
    for row in spec.get("connectors", ()):
        try:
            j, i = int(row["from"]), int(row["to"])
            images = dict(row["images"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed connector row {row!r}") from exc
        if not 1 <= i < j <= len(algebras):
            raise ValidationError(f"projection ({j}, {i}) outside the tower")
        given[(j, i)] = images

    adjacent = []
    for i in range(1, len(algebras)):
        src, dst = algebras[i], algebras[i - 1]
        images = given.get((i + 1, i)) or _truncation_images(src, dst)
        morphism = build_morphism(src, dst, _coerce_images(images))
        if backend == "box":
            constant = box_lipschitz(morphism)
            if constant > Fraction(1):
                raise ValidationError(
                    f"projection {i + 1}->{i} has box constant {constant!r} > 1"
                )
        elif not _certify_one_lipschitz(morphism):
            raise ValidationError(f"projection {i + 1}->{i} is not CC-nonexpansive")
        adjacent.append(morphism)

    tower = InverseTower(algebras, adjacent, backend)
    for (j, i), images in given.items():
        if j == i + 1:
            continue
        direct = build_morphism(algebras[j - 1], algebras[i - 1], _coerce_images(images))
        for mid in range(i + 1, j):
            composite = compose(tower.projection(mid, i), tower.projection(j, mid))
            if [v.coords for v in composite.word_images] != [
                v.coords for v in direct.word_images
            ]:
                raise ValidationError(
                    f"projection triangle ({j}, {mid}, {i}) does not commute"
                )
        tower._composites[(j, i)] = direct
    return tower


def _truncation_images(src, dst):
    """Default projection: positional generator match, surplus to zero."""
    src_labels = sorted(src.label_to_index, key=src.label_to_index.get)
    dst_first = dst.first_layer_indices()
    images = {}
    for pos, lab in enumerate(src_labels):
        if pos < len(dst_first):
            images[lab] = {dst_first[pos]: 1}
        else:
            images[lab] = {}
    return images


def free_tower(depth, rank=2, backend="box"):
    """Tower of free algebras free(rank, k), k = 1..depth, by truncation."""
    levels = [f"free:{rank}:{k}" for k in range(1, depth + 1)]
    return build_inverse_tower({"levels": levels, "backend": backend})
