"""Reproduction table for the degenerate colimit distance.

Conjugating a small vertical displacement by a unit horizontal one,
z_k = exp(-X) exp(eps Y) exp(X) inside free(2, k), gives elements whose
group-level distance stays large while their image under every
quasi-norm stays small. In the growing-step block chain the k-th block
pair (X, Y^k) is an isometric copy of free(2, k) (certified here by an
exact nonexpansive retraction when requested), so these per-k values
are exactly the displacement the c2 probe measures against the input
eps.

Per row the table reports a certified lower bound, an upper bound
witnessed by the three-segment detour path of length 2 + eps, and the
certificates used. The k = 1 block is abelian and the row collapses to
lower = upper = eps. Lower bounds are asserted nondecreasing in k. The
true values approach the detour length as k grows, but no desk-scale
certificate reaching past the fixed isoperimetric bound is available,
so the table never claims the limit: the bracket is the honest output.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import ValidationError
from ..exactnum import format_fraction, parse_fraction
from ..group_ops import build_morphism
from ..lie_core import amalgam_algebra, free_nilpotent_algebra
from ..metrics.distance import distance_bracket
from ..metrics.paths import gamma_path
from .systems import _try_retraction


def _block_isometry_certified(k):
    """Exact retraction certificate for the block copy of free(2, k)."""
    source = free_nilpotent_algebra(2, k)
    target = amalgam_algebra(k)
    inclusion = build_morphism(
        source,
        target,
        {"X": {0: Fraction(1)}, "Y": {target.label_to_index[f"Y^{k}"]: Fraction(1)}},
    )
    return _try_retraction(inclusion)


def degenerate_table(epsilon, kmax, budget=0, certify_blocks=False, seed=0):
    """Rows k = 1..kmax of certified brackets for |z_k| in free(2, k)."""
    eps = parse_fraction(epsilon)
    if eps <= 0:
        raise ValidationError("epsilon must be positive")
    if kmax < 1:
        raise ValidationError("kmax must be at least 1")
    rows = []
    prev_lower = Fraction(0)
    for k in range(1, kmax + 1):
        alg = free_nilpotent_algebra(2, k)
        witness = gamma_path(alg, eps)
        z = witness.endpoint()
        bracket = distance_bracket(
            z, budget=budget, candidate_paths=(witness,), seed=seed
        )
        assert bracket.upper <= 2 + eps
        assert bracket.lower >= prev_lower, (
            f"certified lower bounds must be nondecreasing, broke at k={k}"
        )
        prev_lower = bracket.lower
        block_status = "assumed"
        if certify_blocks:
            block_status = (
                "certified" if _block_isometry_certified(k) else "uncertified"
            )
        rows.append(
            {
                "k": k,
                "lower": format_fraction(bracket.lower),
                "upper": format_fraction(bracket.upper),
                "witness_length": format_fraction(witness.length()),
                "certificates": list(bracket.lower_certificates),
                "block_isometry": block_status,
                "label": "certified-bound",
            }
        )
    return {
        "epsilon": format_fraction(eps),
        "kmax": kmax,
        "rows": rows,
        "note": (
            "brackets only; the limiting value 2 + eps is not certified at "
            "finite k"
        ),
    }
