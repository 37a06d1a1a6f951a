"""Request and response models for the HTTP service.

Requests are validated structurally here (shapes, required fields);
domain validation (algebra membership, connector coherence) stays in
the core modules and surfaces as ValidationError. Rational scalars
travel as "p/q" strings end to end, so responses echo exactly what the
core emits and the models only pin the top-level shape. Nested
certificate payloads vary by backend and stay as open dicts.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ElementDoc(StrictModel):
    """Wire form of a group element: {algebra_id, coords: [[k, "p/q"]]}."""

    algebra_id: str
    coords: list[tuple[int, str]] = Field(default_factory=list)


class SystemElementDoc(StrictModel):
    """Element of a direct system, named by level and level coordinates."""

    level: int
    coords: list[tuple[int, str]] = Field(default_factory=list)


class SystemSpec(StrictModel):
    """Either a preset reference or an explicit chain description."""

    preset: Optional[str] = None
    depth: Optional[int] = None
    levels: Optional[list[Any]] = None
    connectors: Optional[list[dict[str, Any]]] = None
    backend: str = "box"


# ---------------------------------------------------------------------------
# requests
# ---------------------------------------------------------------------------


class HallBasisRequest(StrictModel):
    algebra: str


class MulRequest(StrictModel):
    x: ElementDoc
    y: ElementDoc


class InvRequest(StrictModel):
    x: ElementDoc


class DilateRequest(StrictModel):
    factor: str
    x: ElementDoc


class LiftRequest(StrictModel):
    algebra: str
    points: list[tuple[str, str]]


class CcdistRequest(StrictModel):
    element: ElementDoc
    backend: str = "cc"
    budget: int = 0
    seed: int = 0


class LipschitzRequest(StrictModel):
    src: str
    dst: str
    images: dict[str, Any]
    backend: str = "box"
    samples: int = 64
    seed: int = 0


class ModulusProbeRequest(StrictModel):
    algebra: str
    map: dict[str, Any]
    epsilon: str
    base: Optional[ElementDoc] = None
    compare_base: Optional[ElementDoc] = None
    budget: int = 256
    seed: int = 0
    backend: str = "box"


class PseudodistRequest(StrictModel):
    system: SystemSpec
    x: SystemElementDoc
    y: SystemElementDoc
    K: Optional[int] = None
    budget: int = 0


class NondegProbeRequest(StrictModel):
    system: SystemSpec
    condition: str
    x: Optional[SystemElementDoc] = None
    K: Optional[int] = None
    schedule: int = 5
    seed: int = 0


class TowerElementDoc(StrictModel):
    """Either explicit per-level components or a top element to lift."""

    components: Optional[list[ElementDoc]] = None
    lift_top: Optional[ElementDoc] = None


class TowerSupdistRequest(StrictModel):
    tower: SystemSpec
    a: TowerElementDoc
    b: TowerElementDoc
    budget: int = 0
    candidate_paths: Optional[dict[int, list[dict[str, Any]]]] = None


class FiltrationReportRequest(StrictModel):
    system: SystemSpec
    budget: int = 12
    seed: int = 0


class RademacherProbeRequest(StrictModel):
    f: dict[str, Any]
    p: ElementDoc
    dirs: list[ElementDoc]
    schedule: int = 8
    tolerance: Optional[str] = None


class DegenerateRequest(StrictModel):
    epsilon: str = "1"
    kmax: int = 4
    budget: int = 0
    certify_blocks: bool = False
    seed: int = 0


# ---------------------------------------------------------------------------
# responses
# ---------------------------------------------------------------------------


class BasisRow(StrictModel):
    index: int
    name: str
    degree: int
    label: Optional[str] = None


class HallBasisResponse(StrictModel):
    algebra_id: str
    dim: int
    step: int
    rank: int
    dims_by_degree: list[int]
    rows: list[BasisRow]
    label: str


class ElementResponse(StrictModel):
    element: ElementDoc
    label: str


class LiftResponse(StrictModel):
    endpoint: ElementDoc
    length: str
    path: dict[str, Any]
    label: str


class CcdistResponse(StrictModel):
    backend: str
    distance: dict[str, Any]
    label: str


class LipschitzResponse(StrictModel):
    backend: str
    constant: dict[str, Any]
    nonexpansive: bool
    label: str


class ModulusProbeResponse(StrictModel):
    probe: dict[str, Any]
    compare: Optional[dict[str, Any]] = None
    agree: Optional[bool] = None
    label: str


class PseudodistResponse(StrictModel):
    join: int
    K: int
    backend: str
    values: list[tuple[int, dict[str, Any]]]
    infimum: dict[str, Any]
    tail_status: str
    label: str


class ReportResponse(StrictModel):
    """Envelope for report-shaped results whose rows vary by backend."""

    model_config = ConfigDict(extra="allow")

    label: str


class DegenerateResponse(StrictModel):
    epsilon: str
    kmax: int
    rows: list[dict[str, Any]]
    note: str
    label: str
