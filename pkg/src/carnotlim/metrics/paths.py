"""Horizontal polygonal paths and exact lifts of planar axis curves.

A path is a finite list of (first-layer direction, duration) segments.
Directions must have rational Euclidean norm so that lengths stay exact
rationals; every builder in this package (axis moves, commutator
gadgets, stereographic snapping) produces such directions. The endpoint
is the ordered BCH product of the segment exponentials and is always
computed exactly.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import NamedTuple

from ..errors import InputFormatError, ValidationError
from ..exactnum import format_fraction, parse_fraction
from ..group_ops import GroupElement, bch_multiply, get_algebra
from ..lie_core import AlgebraElement


def rational_l2_norm(vec):
    """Exact Euclidean norm of a sparse rational vector, or None."""
    sq = sum(c * c for c in vec.values())
    if sq == 0:
        return Fraction(0)
    num, den = sq.numerator, sq.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


class HorizontalPath:
    """Piecewise-linear horizontal path from the identity."""

    __slots__ = ("algebra", "segments")

    def __init__(self, algebra, segments):
        self.algebra = algebra
        clean = []
        degrees = algebra.degrees
        for direction, duration in segments:
            if not isinstance(direction, AlgebraElement):
                direction = AlgebraElement(algebra, direction)
            duration = Fraction(duration)
            if duration < 0:
                raise ValidationError("segment duration must be nonnegative")
            if duration == 0 or direction.is_zero():
                continue
            if any(degrees[k] != 1 for k in direction.coords):
                raise ValidationError(
                    "path direction leaves the first layer"
                )
            if rational_l2_norm(direction.coords) is None:
                raise ValidationError(
                    "direction must have rational Euclidean norm; "
                    "snap it (stereographic chart) before building the path"
                )
            clean.append((direction, duration))
        self.segments = tuple(clean)

    def length(self):
        return sum(
            (dur * rational_l2_norm(d.coords) for d, dur in self.segments),
            Fraction(0),
        )

    def endpoint(self):
        out = GroupElement.identity(self.algebra)
        for direction, duration in self.segments:
            out = bch_multiply(out, GroupElement(self.algebra, direction.scale(duration)))
        return out

    def concat(self, other):
        if not self.algebra.same_algebra(other.algebra):
            raise ValidationError("cannot concatenate paths in different algebras")
        return HorizontalPath(self.algebra, self.segments + other.segments)

    def reverse(self):
        return HorizontalPath(
            self.algebra, [(-d, dur) for d, dur in reversed(self.segments)]
        )

    def dilate(self, lam):
        lam = Fraction(lam)
        if lam < 0:
            raise ValidationError("path dilation takes a nonnegative parameter")
        return HorizontalPath(
            self.algebra, [(d, dur * lam) for d, dur in self.segments]
        )

    def __len__(self):
        return len(self.segments)

    def to_json(self):
        return {
            "algebra_id": self.algebra.algebra_id,
            "segments": [
                {
                    "direction": [
                        [k, format_fraction(c)] for k, c in sorted(d.coords.items())
                    ],
                    "duration": format_fraction(dur),
                }
                for d, dur in self.segments
            ],
        }

    @classmethod
    def from_json(cls, doc, algebra=None):
        try:
            alg = algebra or get_algebra(doc["algebra_id"])
            rows = doc["segments"]
        except (KeyError, TypeError) as exc:
            raise InputFormatError(f"malformed path: {exc}") from exc
        segments = []
        for row in rows:
            try:
                coords = {int(k): parse_fraction(c) for k, c in row["direction"]}
                duration = parse_fraction(row["duration"])
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                raise InputFormatError(f"bad path segment {row!r}") from exc
            segments.append((AlgebraElement(alg, coords), duration))
        return cls(alg, segments)


class LiftResult(NamedTuple):
    endpoint: GroupElement
    length: Fraction
    path: HorizontalPath


def _two_generator_indices(algebra):
    labels = algebra.label_to_index
    if "X" not in labels or "Y" not in labels or algebra.rank != 2:
        raise ValidationError(
            f"planar lifts need a rank-2 algebra with generators X, Y; "
            f"got {algebra.algebra_id}"
        )
    return labels["X"], labels["Y"]


def lift_polygonal(breakpoints, algebra):
    """Unique horizontal lift of a planar axis-aligned polygonal curve.

    `breakpoints` is a list of rational (x, y) points; each consecutive
    displacement must be parallel to a coordinate axis. The lift starts
    at the identity; its endpoint is the ordered product of the segment
    exponentials and its length is the total variation of the curve.
    """
    ix, iy = _two_generator_indices(algebra)
    points = [(Fraction(a), Fraction(b)) for a, b in breakpoints]
    if len(points) < 2:
        raise InputFormatError("a polygonal curve needs at least two points")
    segments = []
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        dx, dy = x1 - x0, y1 - y0
        if dx != 0 and dy != 0:
            raise InputFormatError(
                f"non-axis-aligned segment ({x0},{y0}) -> ({x1},{y1}); "
                "general lifts are unsupported"
            )
        if dx == 0 and dy == 0:
            continue
        axis, delta = (ix, dx) if dx != 0 else (iy, dy)
        direction = AlgebraElement(algebra, {axis: 1 if delta > 0 else -1})
        segments.append((direction, abs(delta)))
    path = HorizontalPath(algebra, segments)
    return LiftResult(path.endpoint(), path.length(), path)


def gamma_path(algebra, epsilon):
    """The three-segment detour curve: along -X, up by epsilon, back.

    Its lift ends at exp(-X) exp(epsilon Y) exp(X) and has length
    2 + epsilon in every rank-2 free algebra.
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise ValidationError("gamma needs a positive epsilon")
    lifted = lift_polygonal([(0, 0), (-1, 0), (-1, eps), (0, eps)], algebra)
    return lifted.path
