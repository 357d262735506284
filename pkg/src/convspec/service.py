"""FastAPI service wrapping the scenario pipelines.

The CLI is a thin client over this layer: it either POSTs to a running
service or calls the same handlers in-process.
"""
from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .errors import (ConfigError, ConvergenceError, ConvspecError, SizingError)
from .scenarios import run_scenario, run_sweep_results, validate_scenario


class ScenarioRequest(BaseModel):
    config: dict[str, Any]
    expect_pass: bool = False


class ReportResponse(BaseModel):
    report: dict[str, Any]
    certificate_failed: bool = False


class SweepRequest(BaseModel):
    config: dict[str, Any]
    threads: Optional[int] = Field(default=None, ge=1)


class ErrorBody(BaseModel):
    kind: str
    message: str


def execute_scenario(config: dict, expect_pass: bool = False) -> ReportResponse:
    """Shared handler: run one scenario and flag certificate failures."""
    report = run_scenario(config)
    failed = report["results"].get("passed") is False
    if expect_pass and failed:
        return ReportResponse(report=report, certificate_failed=True)
    return ReportResponse(report=report, certificate_failed=failed)


def create_app() -> FastAPI:
    app = FastAPI(title="convspec", version=__version__,
                  description="Spectral laboratory for nonlocal convolution "
                              "operators with potential")

    @app.exception_handler(ConvspecError)
    async def _domain_error(request, exc: ConvspecError):  # pragma: no cover
        raise _to_http(exc)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/version")
    def version():
        return {"version": __version__}

    @app.post("/scenario/validate")
    def validate(req: ScenarioRequest):
        try:
            validate_scenario(req.config)
        except ConvspecError as exc:
            raise _to_http(exc)
        return {"valid": True}

    @app.post("/scenario/run", response_model=ReportResponse)
    def run(req: ScenarioRequest):
        try:
            return execute_scenario(req.config, req.expect_pass)
        except ConvspecError as exc:
            raise _to_http(exc)

    @app.post("/sweep/run")
    def sweep(req: SweepRequest):
        try:
            validate_scenario(req.config)
            results = run_sweep_results(req.config, threads=req.threads)
        except ConvspecError as exc:
            raise _to_http(exc)
        return {"results": results}

    return app


def _to_http(exc: ConvspecError) -> HTTPException:
    if isinstance(exc, ConfigError):
        status = 400
    elif isinstance(exc, SizingError):
        status = 422
    elif isinstance(exc, ConvergenceError):
        status = 409
    else:
        status = 500
    return HTTPException(status_code=status,
                         detail={"kind": type(exc).__name__, "message": str(exc)})


app = create_app()
