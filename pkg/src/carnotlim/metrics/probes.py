"""Modulus-of-continuity and Lipschitz probes.

Probes are evidence generators, not certificates: they can exhibit a
witness pair that falsifies a continuity claim, but passing samples
only fails to falsify. Sample streams are prefix-stable in the budget
and direction sets are closed under group inversion, which makes the
translation and inversion modulus identities hold exactly at the
sample level rather than merely within tolerance.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import InputFormatError, ValidationError
from ..exactnum import format_fraction
from ..group_ops import GroupElement, bch_multiply, dilate
from ..sampling import SeededSampler
from .distance import distance_bracket
from .quasinorm import box_distance, box_lipschitz, quasi_norm


class ModulusEstimate:
    """Empirical estimate of a modulus of continuity at a base point.

    `estimate` is the smallest sampled input radius whose image left
    the epsilon ball (an upper-evidence bound on the true modulus), or
    None with `unbounded` set when every sample stayed inside (lower
    evidence only). Enlarging the budget can only shrink the estimate.
    """

    __slots__ = (
        "map_name",
        "epsilon",
        "estimate",
        "unbounded",
        "budget",
        "status",
        "backend",
        "seed",
    )

    def __init__(self, map_name, epsilon, estimate, budget, backend, seed):
        self.map_name = map_name
        self.epsilon = Fraction(epsilon)
        self.estimate = estimate
        self.unbounded = estimate is None
        self.budget = budget
        self.status = "lower-evidence" if estimate is None else "upper-evidence"
        self.backend = backend
        self.seed = seed

    def to_json(self):
        return {
            "map": self.map_name,
            "epsilon": format_fraction(self.epsilon),
            "estimate": None if self.unbounded else format_fraction(self.estimate),
            "estimate_float": None if self.unbounded else float(self.estimate),
            "unbounded": self.unbounded,
            "budget": self.budget,
            "status": self.status,
            "backend": self.backend,
            "seed": self.seed,
            "label": "evidence",
        }


def resolve_map(descriptor, algebra):
    """Turn a map descriptor into (name, callable on GroupElement)."""
    kind = descriptor.get("kind")
    if kind in ("left", "right"):
        g = GroupElement.from_json(descriptor["g"], algebra=algebra)
        if kind == "left":
            return f"L[{g.to_json()['coords']}]", lambda p: bch_multiply(g, p)
        return f"R[{g.to_json()['coords']}]", lambda p: bch_multiply(p, g)
    if kind == "inv":
        return "Inv", lambda p: p.inverse()
    if kind == "dilation":
        lam = Fraction(descriptor.get("factor", 1))
        return f"delta[{format_fraction(lam)}]", lambda p: dilate(lam, p)
    raise InputFormatError(f"unknown map descriptor {descriptor!r}")


def _radius(epsilon, pair_index):
    # strictly inside the epsilon ball: isometries must report no violation
    return Fraction(epsilon) * Fraction(2) ** (-1 - (pair_index % 10))


def modulus_probe(map_fn, base, epsilon, budget=256, seed=0, backend="box"):
    """Estimate the largest radius the map keeps inside the epsilon ball.

    Samples are base * delta_r(u) with u on the box unit shell; indices
    2p and 2p+1 share the radius and carry a point and its inverse. The
    budget is rounded down to an even number so the direction set stays
    inversion-closed.
    """
    if isinstance(map_fn, dict):
        name, fn = resolve_map(map_fn, base.algebra)
    else:
        name, fn = getattr(map_fn, "__name__", "map"), map_fn
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValidationError("modulus probe needs a positive epsilon")
    sampler = SeededSampler(seed)
    image_base = fn(base)
    effective = budget - (budget % 2)
    worst = None
    for i in range(effective):
        u = sampler.paired_shell_element(base.algebra, i)
        r = _radius(epsilon, i // 2)
        probe_point = bch_multiply(base, dilate(r, u))
        if backend == "box":
            din = box_distance(base, probe_point)
            dout = quasi_norm(
                bch_multiply(image_base.inverse(), fn(probe_point))
            )
            violated = dout >= epsilon
        elif backend == "cc":
            din_bracket = distance_bracket(base, probe_point)
            din = din_bracket.upper
            dout_bracket = distance_bracket(image_base, fn(probe_point))
            violated = dout_bracket.lower >= epsilon
        else:
            raise InputFormatError(f"unknown backend {backend!r}")
        if violated:
            din_val = din if isinstance(din, Fraction) else Fraction(r)
            if worst is None or din_val < worst:
                worst = din_val
    return ModulusEstimate(name, epsilon, worst, effective, backend, seed)


def uniform_modulus_over_cloud(map_fn, cloud, epsilon, budget=128, seed=0):
    """Smallest per-point modulus estimate over a finite cloud.

    Positive whenever every per-point estimate is positive; the sampled
    analogue of uniform continuity on totally bounded sets.
    """
    floor = None
    unbounded_everywhere = True
    for idx, base in enumerate(cloud):
        est = modulus_probe(
            map_fn, base, epsilon, budget=budget, seed=seed + idx
        )
        if est.unbounded:
            continue
        unbounded_everywhere = False
        if floor is None or est.estimate < floor:
            floor = est.estimate
    return {
        "points": len(cloud),
        "floor": None if floor is None else format_fraction(floor),
        "floor_float": None if floor is None else float(floor),
        "unbounded": unbounded_everywhere,
        "positive": floor is None or floor > 0,
        "label": "evidence",
    }


class LipschitzEstimate:
    __slots__ = ("value", "certified", "backend", "samples")

    def __init__(self, value, certified, backend, samples=0):
        self.value = value
        self.certified = certified
        self.backend = backend
        self.samples = samples

    def to_json(self):
        doc = {
            "value_float": float(self.value),
            "certified": self.certified,
            "backend": self.backend,
            "label": "exact" if self.certified else "evidence",
        }
        if self.certified:
            doc["value_exact"] = self.value.to_json()
        else:
            doc["samples"] = self.samples
        return doc


def lipschitz_estimate(morphism, backend="box", samples=64, seed=0):
    """Lipschitz constant of a graded morphism.

    Box backend: exact supremum over the unit shell (homogeneity
    reduces the problem to one shell, where coordinates decouple).
    CC backend: maximum of midpoint distance ratios over seeded
    samples; flagged non-certified.
    """
    if backend == "box":
        return LipschitzEstimate(box_lipschitz(morphism), True, "box")
    if backend != "cc":
        raise InputFormatError(f"unknown backend {backend!r}")
    sampler = SeededSampler(seed)
    worst = 0.0
    for i in range(samples):
        x = sampler.element(morphism.source, i, span=2, den=4)
        if x.is_identity():
            continue
        num = distance_bracket(morphism(x)).midpoint()
        den = distance_bracket(x).midpoint()
        if den > 0:
            worst = max(worst, num / den)
    return LipschitzEstimate(worst, False, "cc", samples)
