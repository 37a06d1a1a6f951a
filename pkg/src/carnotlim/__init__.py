"""Exact and certified computations on graded nilpotent groups.

The package models stratified Lie algebras by rational structure
constants, the associated groups in exponential coordinates, left
invariant homogeneous distances (exact box quasi-norms and certified
Carnot-Caratheodory brackets), direct and inverse systems of such
groups, and differentiability probes for Lipschitz maps on them.
"""

__version__ = "0.1.0"

from .errors import InputFormatError, ResourceCapError, ValidationError
from .group_ops import (
    Dilation,
    GroupElement,
    Morphism,
    bch_multiply,
    bch_series,
    build_morphism,
    check_abelian_banach_equivalence,
    compose,
    conjugate,
    dilate,
    first_layer_membership,
    identity,
    identity_morphism,
)
from .lie_core import (
    AlgebraElement,
    BasisWord,
    LieAlgebra,
    abelian_algebra,
    algebra_from_json,
    algebra_to_json,
    amalgam_algebra,
    bracket,
    free_nilpotent_algebra,
    get_algebra,
    hall_basis,
    verify_jacobi,
)

__all__ = [
    "AlgebraElement",
    "BasisWord",
    "Dilation",
    "GroupElement",
    "InputFormatError",
    "LieAlgebra",
    "Morphism",
    "ResourceCapError",
    "ValidationError",
    "abelian_algebra",
    "algebra_from_json",
    "algebra_to_json",
    "amalgam_algebra",
    "bch_multiply",
    "bch_series",
    "bracket",
    "build_morphism",
    "check_abelian_banach_equivalence",
    "compose",
    "conjugate",
    "dilate",
    "first_layer_membership",
    "free_nilpotent_algebra",
    "get_algebra",
    "hall_basis",
    "identity",
    "identity_morphism",
    "verify_jacobi",
]
