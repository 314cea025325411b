"""HTTP front end: one POST endpoint per command, JSON envelopes out.

Run with ``uvicorn smalleig.service:app``.  Precondition violations map to
HTTP 400 with a machine-readable body; malformed requests are rejected by
validation with 422.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import PreconditionError, SmalleigError
from .handlers import dispatch
from .models import (DecideRequest, Envelope, ForcedRequest, LambdaRequest,
                     MomentsRequest, PolysRequest, SigmaRequest, SweepRequest,
                     WitnessRequest)

__all__ = ["app", "create_app"]


def create_app() -> FastAPI:
    app = FastAPI(title="smalleig", version=__version__,
                  description="Local-solvability analysis of planar doubly "
                              "characteristic operators")

    def run(command: str, req) -> Envelope:
        try:
            return dispatch(command, req)
        except PreconditionError as exc:
            raise HTTPException(status_code=400,
                                detail={"code": exc.code, "message": str(exc)})
        except SmalleigError as exc:
            raise HTTPException(status_code=422,
                                detail={"code": exc.code, "message": str(exc)})

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/v1/sigma", response_model=Envelope)
    def sigma(req: SigmaRequest) -> Envelope:
        return run("sigma", req)

    @app.post("/v1/moments", response_model=Envelope)
    def moments(req: MomentsRequest) -> Envelope:
        return run("moments", req)

    @app.post("/v1/lambda", response_model=Envelope)
    def lambda_(req: LambdaRequest) -> Envelope:
        return run("lambda", req)

    @app.post("/v1/polys", response_model=Envelope)
    def polys(req: PolysRequest) -> Envelope:
        return run("polys", req)

    @app.post("/v1/forced", response_model=Envelope)
    def forced(req: ForcedRequest) -> Envelope:
        return run("forced", req)

    @app.post("/v1/decide", response_model=Envelope)
    def decide(req: DecideRequest) -> Envelope:
        return run("decide", req)

    @app.post("/v1/sweep", response_model=Envelope)
    def sweep(req: SweepRequest) -> Envelope:
        return run("sweep", req)

    @app.post("/v1/witness", response_model=Envelope)
    def witness(req: WitnessRequest) -> Envelope:
        return run("witness", req)

    return app


app = create_app()
