"""Command handlers shared by the HTTP app and the in-process CLI path.

Each handler takes its request model and returns a plain JSON-ready
dict; the caller owns serialization. Handlers raise the package's own
error types, which the app maps to HTTP statuses and the CLI maps to
exit codes.
"""

from __future__ import annotations

from ..errors import InputFormatError, ValidationError
from ..exactnum import format_fraction, parse_fraction
from ..group_ops import GroupElement, bch_multiply, build_morphism, dilate
from ..lie_core import get_algebra
from ..limits import (
    build_direct_system,
    build_inverse_tower,
    degenerate_table,
    filtration_report,
    infimum_pseudodistance,
    nondeg_probe,
    preset_system,
    sup_distance,
)
from ..limits.tower import TowerElement, free_tower
from ..metrics import (
    box_lipschitz,
    distance_bracket,
    lift_polygonal,
    lipschitz_estimate,
    modulus_probe,
    quasi_norm,
)
from ..metrics.paths import HorizontalPath
from ..rademacher import FunctionExpr, gateaux_probe
from . import schemas


def _element(doc: schemas.ElementDoc) -> GroupElement:
    return GroupElement.from_json(doc.model_dump())


def _load_system(spec: schemas.SystemSpec):
    if spec.preset is not None:
        if spec.depth is None:
            raise InputFormatError("a system preset needs a depth")
        return preset_system(spec.preset, spec.depth, backend=spec.backend)
    if spec.levels is None:
        raise InputFormatError("system spec needs either a preset or levels")
    return build_direct_system(spec.model_dump(exclude_none=True, exclude={"preset", "depth"}))


def _load_tower(spec: schemas.SystemSpec):
    if spec.preset is not None:
        if spec.preset != "free":
            raise InputFormatError(
                f"unknown tower preset {spec.preset!r}; only 'free' ships"
            )
        if spec.depth is None:
            raise InputFormatError("a tower preset needs a depth")
        return free_tower(spec.depth, backend=spec.backend)
    if spec.levels is None:
        raise InputFormatError("tower spec needs either a preset or levels")
    return build_inverse_tower(spec.model_dump(exclude_none=True, exclude={"preset", "depth"}))


def _system_element(system, doc: schemas.SystemElementDoc):
    coords = {int(k): parse_fraction(v) for k, v in doc.coords}
    return system.element(doc.level, coords)


def _tower_element(tower, doc: schemas.TowerElementDoc):
    if (doc.components is None) == (doc.lift_top is None):
        raise InputFormatError(
            "a tower element needs exactly one of components or lift_top"
        )
    if doc.lift_top is not None:
        return tower.lift(_element(doc.lift_top))
    return TowerElement(tower, [_element(c) for c in doc.components])


def hall_basis_cmd(req: schemas.HallBasisRequest) -> dict:
    alg = get_algebra(req.algebra)
    rows = [
        {"index": w.index, "name": w.name, "degree": w.degree, "label": w.label}
        for w in alg.basis
    ]
    return {
        "algebra_id": alg.algebra_id,
        "dim": alg.dim,
        "step": alg.step,
        "rank": alg.rank,
        "dims_by_degree": list(alg.dims_by_degree),
        "rows": rows,
        "label": "exact",
    }


def mul_cmd(req: schemas.MulRequest) -> dict:
    x, y = _element(req.x), _element(req.y)
    if not x.algebra.same_algebra(y.algebra):
        raise ValidationError(
            f"cannot multiply across algebras "
            f"{x.algebra.algebra_id} and {y.algebra.algebra_id}"
        )
    return {"element": bch_multiply(x, y).to_json(), "label": "exact"}


def inv_cmd(req: schemas.InvRequest) -> dict:
    return {"element": _element(req.x).inverse().to_json(), "label": "exact"}


def dilate_cmd(req: schemas.DilateRequest) -> dict:
    lam = parse_fraction(req.factor)
    return {"element": dilate(lam, _element(req.x)).to_json(), "label": "exact"}


def lift_cmd(req: schemas.LiftRequest) -> dict:
    alg = get_algebra(req.algebra)
    points = [(parse_fraction(a), parse_fraction(b)) for a, b in req.points]
    result = lift_polygonal(points, alg)
    return {
        "endpoint": result.endpoint.to_json(),
        "length": format_fraction(result.length),
        "path": result.path.to_json(),
        "label": "exact",
    }


def ccdist_cmd(req: schemas.CcdistRequest) -> dict:
    x = _element(req.element)
    if req.backend == "box":
        return {
            "backend": "box",
            "distance": quasi_norm(x).to_json(),
            "label": "exact",
        }
    if req.backend != "cc":
        raise InputFormatError(f"unknown backend {req.backend!r}")
    bracket = distance_bracket(x, budget=req.budget, seed=req.seed)
    return {"backend": "cc", "distance": bracket.to_json(), "label": "certified-bound"}


def lipschitz_cmd(req: schemas.LipschitzRequest) -> dict:
    src, dst = get_algebra(req.src), get_algebra(req.dst)
    images = {
        label: {int(k): parse_fraction(v) for k, v in dict(img).items()}
        for label, img in req.images.items()
    }
    morphism = build_morphism(src, dst, images)
    if req.backend == "box":
        constant = box_lipschitz(morphism)
        return {
            "backend": "box",
            "constant": constant.to_json(),
            "nonexpansive": constant <= 1,
            "label": "exact",
        }
    estimate = lipschitz_estimate(
        morphism, backend=req.backend, samples=req.samples, seed=req.seed
    )
    return {
        "backend": req.backend,
        "constant": estimate.to_json(),
        "nonexpansive": estimate.value <= 1,
        "label": estimate.to_json()["label"],
    }


def modulus_probe_cmd(req: schemas.ModulusProbeRequest) -> dict:
    alg = get_algebra(req.algebra)
    base = (
        GroupElement.identity(alg) if req.base is None else _element(req.base)
    )
    epsilon = parse_fraction(req.epsilon)
    est = modulus_probe(
        req.map, base, epsilon, budget=req.budget, seed=req.seed, backend=req.backend
    )
    out = {"probe": est.to_json(), "compare": None, "agree": None, "label": "evidence"}
    if req.compare_base is not None:
        other = modulus_probe(
            req.map,
            _element(req.compare_base),
            epsilon,
            budget=req.budget,
            seed=req.seed,
            backend=req.backend,
        )
        out["compare"] = other.to_json()
        out["agree"] = est.estimate == other.estimate
    return out


def dl_pseudodist_cmd(req: schemas.PseudodistRequest) -> dict:
    system = _load_system(req.system)
    x = _system_element(system, req.x)
    y = _system_element(system, req.y)
    result = infimum_pseudodistance(system, x, y, K=req.K, budget=req.budget)
    label = "exact" if system.backend == "box" else "certified-bound"
    return {
        "join": result["join"],
        "K": result["K"],
        "backend": result["backend"],
        "values": [(k, v.to_json()) for k, v in result["values"]],
        "infimum": result["infimum"].to_json(),
        "tail_status": result["tail_status"],
        "label": label,
    }


def nondeg_probe_cmd(req: schemas.NondegProbeRequest) -> dict:
    system = _load_system(req.system)
    x = None if req.x is None else _system_element(system, req.x)
    return nondeg_probe(
        system,
        req.condition,
        x=x,
        K=req.K,
        schedule=req.schedule,
        seed=req.seed,
    )


def tower_supdist_cmd(req: schemas.TowerSupdistRequest) -> dict:
    tower = _load_tower(req.tower)
    a = _tower_element(tower, req.a)
    b = _tower_element(tower, req.b)
    candidates = None
    if req.candidate_paths is not None:
        candidates = {
            int(level): tuple(
                HorizontalPath.from_json(doc) for doc in docs
            )
            for level, docs in req.candidate_paths.items()
        }
    return sup_distance(tower, a, b, budget=req.budget, candidate_paths=candidates)


def filtration_report_cmd(req: schemas.FiltrationReportRequest) -> dict:
    system = _load_system(req.system)
    return filtration_report(system, budget=req.budget, seed=req.seed)


def rademacher_probe_cmd(req: schemas.RademacherProbeRequest) -> dict:
    f = FunctionExpr.from_json(req.f)
    p = _element(req.p)
    dirs = [_element(d) for d in req.dirs]
    if not dirs:
        raise InputFormatError("rademacher probe needs at least one direction")
    tolerance = None if req.tolerance is None else parse_fraction(req.tolerance)
    return gateaux_probe(
        f, p, dirs, schedule_steps=req.schedule, tolerance=tolerance
    )


def degenerate_cmd(req: schemas.DegenerateRequest) -> dict:
    epsilon = parse_fraction(req.epsilon)
    result = degenerate_table(
        epsilon,
        req.kmax,
        budget=req.budget,
        certify_blocks=req.certify_blocks,
        seed=req.seed,
    )
    result["label"] = "certified-bound"
    return result
