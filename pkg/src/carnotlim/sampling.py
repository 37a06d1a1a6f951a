"""Seeded, prefix-stable sampling for probes and searches.

Every draw is a pure function of (seed, index), so enlarging a sample
budget extends the stream instead of reshuffling it. Probes rely on
this to make their estimates monotone in the budget, and negation
paired direction streams let inversion-related moduli agree exactly at
the sample level.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .group_ops import GroupElement

_STRIDE = 1_000_003


class SeededSampler:
    """Deterministic sampler; all methods depend only on (seed, index)."""

    def __init__(self, seed):
        self.seed = int(seed)

    def rng(self, index):
        return random.Random(self.seed * _STRIDE + int(index))

    def fraction(self, index, lo=-4, hi=4, den=12):
        rng = self.rng(index)
        return Fraction(rng.randint(lo * den, hi * den), den)

    def element(self, algebra, index, span=4, den=8):
        rng = self.rng(index)
        coords = {
            k: Fraction(rng.randint(-span * den, span * den), den)
            for k in range(algebra.dim)
            if rng.random() < 0.85
        }
        return GroupElement(algebra, coords)

    def first_layer_element(self, algebra, index, span=4, den=8):
        rng = self.rng(index)
        coords = {
            k: Fraction(rng.randint(-span * den, span * den), den)
            for k in algebra.first_layer_indices()
        }
        return GroupElement(algebra, coords)

    def shell_element(self, algebra, index, den=16):
        """Uniform coordinates on the box quasi-norm unit shell."""
        rng = self.rng(index)
        coords = {
            k: Fraction(rng.randint(-den, den), den) for k in range(algebra.dim)
        }
        pivot = rng.randrange(algebra.dim)
        coords[pivot] = Fraction(rng.choice((-1, 1)))
        return GroupElement(algebra, coords)

    def paired_shell_element(self, algebra, index, den=16):
        """Index 2p and 2p+1 give a point and its group inverse."""
        base = self.shell_element(algebra, index // 2, den=den)
        return base if index % 2 == 0 else base.inverse()

    def unit_direction(self, index, dim, den=8):
        """Exact rational Euclidean unit vector via the stereographic chart."""
        rng = self.rng(index)
        return stereographic_unit(
            [Fraction(rng.randint(-2 * den, 2 * den), den) for _ in range(dim - 1)]
        ) if dim > 1 else [Fraction(rng.choice((-1, 1)))]


def stereographic_unit(params):
    """Map rational parameters to an exact rational unit vector.

    (t_1..t_{n-1}) -> (2t, |t|^2 - 1)/(|t|^2 + 1); the squared norm of
    the image is identically one.
    """
    t = [Fraction(p) for p in params]
    sq = sum(p * p for p in t)
    denom = sq + 1
    out = [2 * p / denom for p in t]
    out.append((sq - 1) / denom)
    assert sum(c * c for c in out) == 1
    return out
