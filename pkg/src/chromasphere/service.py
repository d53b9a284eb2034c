"""HTTP service exposing the pipeline.

All endpoints are POST with JSON bodies; the CLI drives them in-process
through an ASGI transport by default.  Domain/usage errors surface as
HTTP 400 (clients map them to exit code 2); failed certificates are NOT
errors — the response carries ok=false and the failing details.
Artifact files are written server-side when a request names an out_dir
(with the in-process transport that is the caller's own filesystem).
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .artifacts import to_builtin
from .errors import DomainError, InfeasibleError
from .pipeline import (ExperimentConfig, run_color_ball, run_color_sphere,
                       run_construct, run_cover_lab, run_curve, run_params,
                       run_verify)
from .schemas import (CoverLabRequest, CoverLabResponse, CurveRequest,
                      CurveResponse, ParamsRequest, ParamsResponse,
                      ReportResponse, RunRequest, VerifyRequest)


def create_app():
    app = FastAPI(title="chromasphere", version=__version__)

    @app.exception_handler(DomainError)
    def _domain(request: Request, exc: DomainError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "kind": "domain"})

    @app.exception_handler(InfeasibleError)
    def _infeasible(request: Request, exc: InfeasibleError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "kind": "infeasible"})

    def _config(req: RunRequest) -> ExperimentConfig:
        return ExperimentConfig(
            n=req.n, R=req.R, eps=req.eps,
            lambda_fraction=req.lambda_fraction, seed=req.seed,
            samples=req.samples, rotations=req.rotations,
            out_dir=req.out_dir,
        )

    @app.post("/params", response_model=ParamsResponse)
    def params(req: ParamsRequest):
        return to_builtin(run_params(req.R, req.eps))

    @app.post("/curve", response_model=CurveResponse)
    def curve(req: CurveRequest):
        return {"csv": run_curve(req.rmin, req.rmax, req.steps)}

    @app.post("/construct", response_model=ReportResponse)
    def construct(req: RunRequest):
        payload, _ = run_construct(_config(req))
        return to_builtin(payload)

    @app.post("/color-sphere", response_model=ReportResponse)
    def color_sphere(req: RunRequest):
        payload, _ = run_color_sphere(_config(req))
        return to_builtin(payload)

    @app.post("/color-ball", response_model=ReportResponse)
    def color_ball(req: RunRequest):
        payload, _ = run_color_ball(_config(req))
        return to_builtin(payload)

    @app.post("/cover-lab", response_model=CoverLabResponse)
    def cover_lab(req: CoverLabRequest):
        return to_builtin(run_cover_lab({"vertices": req.vertices,
                                         "edges": req.edges}))

    @app.post("/verify", response_model=ReportResponse)
    def verify(req: VerifyRequest):
        return to_builtin(run_verify(_config(req), include_ball=req.include_ball))

    return app


app = create_app()
