"""FastAPI app exposing the command handlers.

Error mapping, mirrored by the CLI's exit codes: malformed input
(including request-shape failures caught by the models) answers 400
with kind "input-format"; domain rule violations answer 422 with kind
"validation"; resource caps answer 429 with kind "resource-cap".
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InputFormatError, ResourceCapError, ValidationError
from . import handlers, schemas

ERROR_KINDS = {
    InputFormatError: ("input-format", 400),
    ValidationError: ("validation", 422),
    ResourceCapError: ("resource-cap", 429),
}


def create_app() -> FastAPI:
    app = FastAPI(title="carnotlim", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"kind": "input-format", "error": str(exc.errors())},
        )

    for err_type, (kind, status) in ERROR_KINDS.items():

        def _make(kind=kind, status=status):
            async def _handler(request: Request, exc: Exception):
                return JSONResponse(
                    status_code=status, content={"kind": kind, "error": str(exc)}
                )

            return _handler

        app.add_exception_handler(err_type, _make())

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/hall-basis", response_model=schemas.HallBasisResponse)
    async def hall_basis(req: schemas.HallBasisRequest):
        return handlers.hall_basis_cmd(req)

    @app.post("/v1/mul", response_model=schemas.ElementResponse)
    async def mul(req: schemas.MulRequest):
        return handlers.mul_cmd(req)

    @app.post("/v1/inv", response_model=schemas.ElementResponse)
    async def inv(req: schemas.InvRequest):
        return handlers.inv_cmd(req)

    @app.post("/v1/dilate", response_model=schemas.ElementResponse)
    async def dilate(req: schemas.DilateRequest):
        return handlers.dilate_cmd(req)

    @app.post("/v1/lift", response_model=schemas.LiftResponse)
    async def lift(req: schemas.LiftRequest):
        return handlers.lift_cmd(req)

    @app.post("/v1/ccdist", response_model=schemas.CcdistResponse)
    async def ccdist(req: schemas.CcdistRequest):
        return handlers.ccdist_cmd(req)

    @app.post("/v1/lipschitz", response_model=schemas.LipschitzResponse)
    async def lipschitz(req: schemas.LipschitzRequest):
        return handlers.lipschitz_cmd(req)

    @app.post("/v1/modulus-probe", response_model=schemas.ModulusProbeResponse)
    async def modulus_probe(req: schemas.ModulusProbeRequest):
        return handlers.modulus_probe_cmd(req)

    @app.post("/v1/dl-pseudodist", response_model=schemas.PseudodistResponse)
    async def dl_pseudodist(req: schemas.PseudodistRequest):
        return handlers.dl_pseudodist_cmd(req)

    @app.post("/v1/nondeg-probe", response_model=schemas.ReportResponse)
    async def nondeg_probe(req: schemas.NondegProbeRequest):
        return handlers.nondeg_probe_cmd(req)

    @app.post("/v1/tower-supdist", response_model=schemas.ReportResponse)
    async def tower_supdist(req: schemas.TowerSupdistRequest):
        return handlers.tower_supdist_cmd(req)

    @app.post("/v1/filtration-report", response_model=schemas.ReportResponse)
    async def filtration(req: schemas.FiltrationReportRequest):
        return handlers.filtration_report_cmd(req)

    @app.post("/v1/rademacher-probe", response_model=schemas.ReportResponse)
    async def rademacher(req: schemas.RademacherProbeRequest):
        return handlers.rademacher_probe_cmd(req)

    @app.post("/v1/repro/degenerate", response_model=schemas.DegenerateResponse)
    async def degenerate(req: schemas.DegenerateRequest):
        return handlers.degenerate_cmd(req)

    return app
