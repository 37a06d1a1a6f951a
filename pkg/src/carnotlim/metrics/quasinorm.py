"""Exact homogeneous box quasi-norm and the induced left-invariant gauge.

The norm of x is max over basis words w of |x_w|^(1/degree(w)),
represented as an exact radical (`Root`), so homogeneity under rational
dilations and symmetry under inversion are identities, not
approximations. No triangle inequality is proven for this gauge; the
factor measured by `quasi_triangle_constant_estimate` is 1.0 on every
shipped algebra, but code that needs a certified metric uses the
Carnot-Caratheodory brackets instead.
"""

from __future__ import annotations

from fractions import Fraction

from ..exactnum import Root
from ..group_ops import bch_multiply


def quasi_norm(x):
    """Box quasi-norm of a group element, as an exact Root."""
    best = Root.zero()
    degrees = x.algebra.degrees
    for k, v in x.coords.items():
        cand = Root(abs(v), degrees[k])
        if cand > best:
            best = cand
    return best


def box_distance(x, y):
    """Left-invariant gauge d(x, y) = quasi_norm(x^{-1} y), exact."""
    return quasi_norm(bch_multiply(x.inverse(), y))


def box_ball_contains(x, radius):
    """Exact test quasi_norm(x) <= radius for rational radius."""
    r = Fraction(radius)
    if r < 0:
        return False
    degrees = x.algebra.degrees
    return all(abs(v) <= r ** degrees[k] for k, v in x.coords.items())


def box_lipschitz(morphism):
    """Exact Lipschitz constant of a graded morphism for box gauges.

    On the box unit ball the coordinates vary independently in [-1, 1],
    so sup |(phi x)_v| equals the absolute row sum S_v of the matrix and
    the constant is max_v S_v^(1/degree(v)), attained at a sign vector.
    Homogeneity transfers the ball supremum to the Lipschitz constant of
    the left-invariant gauges.
    """
    best = Root.zero()
    target_degrees = morphism.target.degrees
    rows = {}
    for img in morphism.word_images:
        for v_idx, c in img.coords.items():
            rows[v_idx] = rows.get(v_idx, Fraction(0)) + abs(c)
    for v_idx, total in rows.items():
        cand = Root(total, target_degrees[v_idx])
        if cand > best:
            best = cand
    return best


def quasi_triangle_constant_estimate(algebra, samples, seed):
    """Empirical quasi-triangle factor sup |xy| / (|x| + |y|), evidence only."""
    from ..sampling import SeededSampler

    sampler = SeededSampler(seed)
    worst = 0.0
    for i in range(samples):
        x = sampler.element(algebra, 2 * i)
        y = sampler.element(algebra, 2 * i + 1)
        denom = float(quasi_norm(x)) + float(quasi_norm(y))
        if denom == 0.0:
            continue
        ratio = float(quasi_norm(bch_multiply(x, y))) / denom
        worst = max(worst, ratio)
    return worst
