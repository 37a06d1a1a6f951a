"""Command-line front door.

Commands parse their inputs into the service request models, dispatch
either in process or against a running server (--server URL), and emit
canonical JSON or CSV. Output bytes are a function of the RunConfig
alone: keys are sorted, rationals print as "p/q", and bare floats
(evidence fields only) print with 12 significant digits.

Exit codes: 0 success, 2 parse/format errors, 3 domain validation
errors, 4 resource caps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import pydantic

from .errors import InputFormatError, ResourceCapError, ValidationError
from .exactnum import fmt_float
from .service import handlers, schemas

PACKAGE_ERRORS = (InputFormatError, ValidationError, ResourceCapError)


def exit_code_for(exc: Exception) -> int:
    # InputFormatError before ValidationError: both subclass ValueError
    if isinstance(exc, InputFormatError):
        return 2
    if isinstance(exc, ValidationError):
        return 3
    return 4

COMMANDS = {
    "hall-basis": (schemas.HallBasisRequest, handlers.hall_basis_cmd, "/v1/hall-basis"),
    "mul": (schemas.MulRequest, handlers.mul_cmd, "/v1/mul"),
    "inv": (schemas.InvRequest, handlers.inv_cmd, "/v1/inv"),
    "dilate": (schemas.DilateRequest, handlers.dilate_cmd, "/v1/dilate"),
    "lift": (schemas.LiftRequest, handlers.lift_cmd, "/v1/lift"),
    "ccdist": (schemas.CcdistRequest, handlers.ccdist_cmd, "/v1/ccdist"),
    "lipschitz": (schemas.LipschitzRequest, handlers.lipschitz_cmd, "/v1/lipschitz"),
    "modulus-probe": (
        schemas.ModulusProbeRequest,
        handlers.modulus_probe_cmd,
        "/v1/modulus-probe",
    ),
    "dl-pseudodist": (
        schemas.PseudodistRequest,
        handlers.dl_pseudodist_cmd,
        "/v1/dl-pseudodist",
    ),
    "nondeg-probe": (
        schemas.NondegProbeRequest,
        handlers.nondeg_probe_cmd,
        "/v1/nondeg-probe",
    ),
    "tower-supdist": (
        schemas.TowerSupdistRequest,
        handlers.tower_supdist_cmd,
        "/v1/tower-supdist",
    ),
    "filtration-report": (
        schemas.FiltrationReportRequest,
        handlers.filtration_report_cmd,
        "/v1/filtration-report",
    ),
    "rademacher-probe": (
        schemas.RademacherProbeRequest,
        handlers.rademacher_probe_cmd,
        "/v1/rademacher-probe",
    ),
    "repro degenerate": (
        schemas.DegenerateRequest,
        handlers.degenerate_cmd,
        "/v1/repro/degenerate",
    ),
}


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run; equal configs give equal bytes."""

    command: str
    params: dict = field(default_factory=dict)
    fmt: str = "json"
    output: Optional[str] = None
    server: Optional[str] = None


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------


def canonical_json(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 12 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = (
            f"{inner}{json.dumps(str(k))}: {canonical_json(v, indent + 1)}"
            for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))
        )
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(canonical_json(v) for v in obj) + "]"
        rows = (f"{inner}{canonical_json(v, indent + 1)}" for v in obj)
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise InputFormatError(f"cannot serialize {type(obj).__name__} canonically")


def render_csv(command: str, result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if command == "repro degenerate":
        writer.writerow(["k", "lower", "upper", "witness-length", "block-isometry", "label"])
        for row in result["rows"]:
            writer.writerow(
                [
                    row["k"],
                    row["lower"],
                    row["upper"],
                    row["witness_length"],
                    row["block_isometry"],
                    row["label"],
                ]
            )
    elif command == "hall-basis":
        writer.writerow(["index", "name", "degree", "label"])
        for row in result["rows"]:
            writer.writerow([row["index"], row["name"], row["degree"], row["label"] or ""])
    else:
        raise InputFormatError(f"{command} has no CSV rendering; use --json")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# input loading
# ---------------------------------------------------------------------------


def load_doc(value: str) -> Any:
    """Parse an inline JSON literal, or read and parse a file path."""
    text = value.strip()
    if text.startswith(("{", "[")):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"bad inline JSON: {exc}") from exc
    if not os.path.exists(value):
        raise InputFormatError(
            f"{value!r} is neither inline JSON nor an existing file"
        )
    try:
        with open(value, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{value}: {exc}") from exc


def _points_arg(value: str):
    """Planar points: JSON [[x, y], ...] or compact 'x,y;x,y;...'."""
    if value.strip().startswith("["):
        doc = load_doc(value)
    else:
        try:
            doc = [pair.split(",") for pair in value.split(";")]
        except AttributeError as exc:
            raise InputFormatError(f"bad points {value!r}") from exc
    points = []
    for pair in doc:
        if len(pair) != 2:
            raise InputFormatError(f"point {pair!r} is not a pair")
        points.append((str(pair[0]).strip(), str(pair[1]).strip()))
    return points


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def run(config: RunConfig) -> str:
    """Execute a config and return the rendered output text."""
    model_cls, handler, path = COMMANDS[config.command]
    try:
        request = model_cls.model_validate(config.params)
    except pydantic.ValidationError as exc:
        raise InputFormatError(f"bad request: {exc}") from exc
    if config.server is None:
        result = handler(request)
    else:
        result = _remote(config.server, path, request)
    if config.fmt == "csv":
        return render_csv(config.command, result)
    return canonical_json(result) + "\n"


def _remote(server: str, path: str, request) -> dict:
    import httpx

    response = httpx.post(
        server.rstrip("/") + path,
        json=request.model_dump(mode="json", exclude_none=True),
        timeout=600.0,
    )
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
        kind, msg = body["kind"], body["error"]
    except Exception as exc:
        raise InputFormatError(
            f"server answered {response.status_code}: {response.text[:200]}"
        ) from exc
    error_types = {
        "input-format": InputFormatError,
        "validation": ValidationError,
        "resource-cap": ResourceCapError,
    }
    raise error_types.get(kind, InputFormatError)(msg)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser):
    parser.add_argument("--json", dest="fmt", action="store_const", const="json")
    parser.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    parser.add_argument("--output", help="write the result to this path")
    parser.add_argument("--server", help="dispatch against a running service URL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carnotlim",
        description=__doc__.split("\n\n")[0],
        epilog=(
            "Inline JSON and file paths are interchangeable for document "
            "arguments. The BCH cache honors CARNOTLIM_CACHE_DIR."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hall-basis", help="basis words, degrees, per-degree dims")
    p.add_argument("--algebra", required=True, help="algebra id, e.g. free:2:3")
    _add_common(p)

    p = sub.add_parser("mul", help="exact group product of two elements")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    _add_common(p)

    p = sub.add_parser("inv", help="exact group inverse")
    p.add_argument("--x", required=True)
    _add_common(p)

    p = sub.add_parser("dilate", help="apply the dilation of a rational factor")
    p.add_argument("--factor", required=True, help='rational "p/q"')
    p.add_argument("--x", required=True)
    _add_common(p)

    p = sub.add_parser("lift", help="horizontal lift of an axis-aligned planar curve")
    p.add_argument("--algebra", required=True)
    p.add_argument("--points", required=True, help='JSON [[x,y],...] or "x,y;x,y"')
    _add_common(p)

    p = sub.add_parser("ccdist", help="distance from the identity to an element")
    p.add_argument("--element", required=True)
    p.add_argument("--algebra", help="optional consistency check against the element")
    p.add_argument("--backend", choices=("box", "cc"), default="cc")
    p.add_argument("--budget", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("lipschitz", help="Lipschitz constant of a graded morphism")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--images", required=True, help="JSON {label: {index: p/q}}")
    p.add_argument("--backend", choices=("box", "cc"), default="box")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("modulus-probe", help="modulus-of-continuity evidence probe")
    p.add_argument("--algebra", required=True)
    p.add_argument("--map", required=True, help="JSON map descriptor")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--base")
    p.add_argument("--compare-base", dest="compare_base")
    p.add_argument("--budget", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("box", "cc"), default="box")
    _add_common(p)

    p = sub.add_parser("dl-pseudodist", help="per-level distances and infimum in a chain")
    p.add_argument("--system", required=True, help="JSON spec or preset doc")
    p.add_argument("--x", required=True, help='JSON {"level": i, "coords": [[k, p/q]]}')
    p.add_argument("--y", required=True)
    p.add_argument("--K", type=int)
    p.add_argument("--budget", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("nondeg-probe", help="continuity probes for a chain")
    p.add_argument("--system", required=True)
    p.add_argument("--condition", required=True, choices=("c1", "c2", "c3"))
    p.add_argument("--x")
    p.add_argument("--K", type=int)
    p.add_argument("--schedule", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("tower-supdist", help="sup distance between tower elements")
    p.add_argument("--tower", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--budget", type=int, default=0)
    p.add_argument("--paths", help="JSON {level: [path docs]} of upper-bound witnesses")
    _add_common(p)

    p = sub.add_parser("filtration-report", help="generation/containment/isometry checks")
    p.add_argument("--system", required=True)
    p.add_argument("--budget", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("rademacher-probe", help="directional differentiability report")
    p.add_argument("--f", required=True, help="function AST JSON")
    p.add_argument("--p", required=True, help="base point element JSON")
    p.add_argument("--dirs", required=True, help="JSON list of direction elements")
    p.add_argument("--schedule", type=int, default=8)
    p.add_argument("--tolerance")
    _add_common(p)

    p = sub.add_parser("repro", help="reproduction tables")
    p.add_argument("what", choices=("degenerate",))
    p.add_argument("--epsilon", default="1")
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--budget", type=int, default=0)
    p.add_argument("--certify-blocks", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    command = args.command
    if command == "repro":
        command = f"repro {args.what}"
        params = {
            "epsilon": args.epsilon,
            "kmax": args.kmax,
            "budget": args.budget,
            "certify_blocks": args.certify_blocks,
            "seed": args.seed,
        }
        fmt = args.fmt or "csv"
        return RunConfig(command, params, fmt, args.output, args.server)

    params: dict[str, Any] = {}
    if command == "hall-basis":
        params = {"algebra": args.algebra}
    elif command == "mul":
        params = {"x": load_doc(args.x), "y": load_doc(args.y)}
    elif command == "inv":
        params = {"x": load_doc(args.x)}
    elif command == "dilate":
        params = {"factor": args.factor, "x": load_doc(args.x)}
    elif command == "lift":
        params = {"algebra": args.algebra, "points": _points_arg(args.points)}
    elif command == "ccdist":
        element = load_doc(args.element)
        if args.algebra and element.get("algebra_id") not in (None, args.algebra):
            raise InputFormatError(
                f"--algebra {args.algebra} disagrees with the element's "
                f"{element.get('algebra_id')}"
            )
        params = {
            "element": element,
            "backend": args.backend,
            "budget": args.budget,
            "seed": args.seed,
        }
    elif command == "lipschitz":
        params = {
            "src": args.src,
            "dst": args.dst,
            "images": load_doc(args.images),
            "backend": args.backend,
            "samples": args.samples,
            "seed": args.seed,
        }
    elif command == "modulus-probe":
        params = {
            "algebra": args.algebra,
            "map": load_doc(args.map),
            "epsilon": args.epsilon,
            "budget": args.budget,
            "seed": args.seed,
            "backend": args.backend,
        }
        if args.base:
            params["base"] = load_doc(args.base)
        if args.compare_base:
            params["compare_base"] = load_doc(args.compare_base)
    elif command == "dl-pseudodist":
        params = {
            "system": load_doc(args.system),
            "x": load_doc(args.x),
            "y": load_doc(args.y),
            "budget": args.budget,
        }
        if args.K is not None:
            params["K"] = args.K
    elif command == "nondeg-probe":
        params = {
            "system": load_doc(args.system),
            "condition": args.condition,
            "schedule": args.schedule,
            "seed": args.seed,
        }
        if args.x:
            params["x"] = load_doc(args.x)
        if args.K is not None:
            params["K"] = args.K
    elif command == "tower-supdist":
        params = {
            "tower": load_doc(args.tower),
            "a": load_doc(args.a),
            "b": load_doc(args.b),
            "budget": args.budget,
        }
        if args.paths:
            params["candidate_paths"] = load_doc(args.paths)
    elif command == "filtration-report":
        params = {
            "system": load_doc(args.system),
            "budget": args.budget,
            "seed": args.seed,
        }
    elif command == "rademacher-probe":
        params = {
            "f": load_doc(args.f),
            "p": load_doc(args.p),
            "dirs": load_doc(args.dirs),
            "schedule": args.schedule,
        }
        if args.tolerance:
            params["tolerance"] = args.tolerance
    else:
        raise InputFormatError(f"unknown command {command!r}")
    return RunConfig(command, params, args.fmt or "json", args.output, args.server)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0
    try:
        config = config_from_args(args)
        text = run(config)
    except PACKAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
