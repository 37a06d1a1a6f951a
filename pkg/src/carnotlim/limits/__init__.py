"""Direct and inverse systems of scalable groups and their limit probes."""

from .degenerate import degenerate_table
from .probes import filtration_report, nondeg_probe
from .systems import (
    ColimitElement,
    DirectSystem,
    SYSTEM_PRESETS,
    abelian_system,
    amalgam_system,
    build_direct_system,
    contracting_system,
    filtration_system,
    infimum_pseudodistance,
    preset_system,
    zero_set_probe,
)
from .tower import (
    InverseTower,
    TowerElement,
    build_inverse_tower,
    free_tower,
    sup_distance,
)

__all__ = [
    "ColimitElement",
    "DirectSystem",
    "InverseTower",
    "SYSTEM_PRESETS",
    "TowerElement",
    "abelian_system",
    "amalgam_system",
    "build_direct_system",
    "build_inverse_tower",
    "contracting_system",
    "degenerate_table",
    "filtration_report",
    "filtration_system",
    "free_tower",
    "infimum_pseudodistance",
    "nondeg_probe",
    "preset_system",
    "sup_distance",
    "zero_set_probe",
]
