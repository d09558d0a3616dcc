"""HTTP service exposing the signature-kernel library.

Thin JSON wrappers over the library calls: every endpoint converts pydantic
request models to library types, runs the computation, and returns a typed
response.  Input errors map to HTTP 400, numerical failures to HTTP 422.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .config import RunConfig
from .data import TimeSeries, sample_fbm, time_augment
from .errors import InputError, NumericalError
from .gram import gram, mmd_squared
from .reduction import WeightedEnsemble, reduce_ensemble
from .solver import convergence_study, signature_pde_kernel

__all__ = ["create_app"]


class SeriesModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    times: list[float]
    values: list[list[float]]
    name: str | None = None

    @classmethod
    def from_series(cls, x: TimeSeries) -> "SeriesModel":
        return cls(times=x.times.tolist(), values=x.values.tolist(), name=x.name)

    def to_series(self) -> TimeSeries:
        return TimeSeries(self.times, self.values, name=self.name)


class ConfigModel(BaseModel):
    # wire schema uses the JSON key "lambda" only
    model_config = ConfigDict(extra="forbid")

    static_kernel: Literal["linear", "rbf"] = "linear"
    sigma: float | None = None
    lam: int = Field(default=3, alias="lambda", ge=0)
    scheme: Literal["explicit", "implicit"] = "explicit"
    rescale: bool = True
    threads: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0)

    def to_run_config(self) -> RunConfig:
        return RunConfig(static_kernel=self.static_kernel, sigma=self.sigma,
                         lam=self.lam, scheme=self.scheme, rescale=self.rescale,
                         threads=self.threads, seed=self.seed)


class KernelRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: SeriesModel
    y: SeriesModel
    config: ConfigModel = ConfigModel()
    time_augment: bool = False


class KernelResponse(BaseModel):
    value: float


class GramRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    xs: list[SeriesModel]
    ys: list[SeriesModel] | None = None
    config: ConfigModel = ConfigModel()
    time_augment: bool = False


class GramResponse(BaseModel):
    values: list[list[float]]
    config: dict


class MmdRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    xs: list[SeriesModel]
    ys: list[SeriesModel]
    variant: Literal["unbiased", "biased"] = "unbiased"
    config: ConfigModel = ConfigModel()
    time_augment: bool = False


class MmdResponse(BaseModel):
    mmd_squared: float
    variant: str


class ReduceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    paths: list[SeriesModel]
    alpha: list[float] | None = None
    penalty: float | None = None
    support_size: int | None = None
    step: float | None = None
    max_iter: int = Field(default=10000, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    config: ConfigModel = ConfigModel()
    time_augment: bool = False


class ReduceResponse(BaseModel):
    beta: list[float]
    support_indices: list[int]
    loss_history: list[float]
    penalty_used: float
    iterations: int
    converged: bool
    fixed_point_residual: float


class FbmRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hurst: float
    length: int = 50
    count: int = 30
    seed: int = Field(default=0, ge=0)


class FbmResponse(BaseModel):
    paths: list[SeriesModel]


class ConvergenceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: SeriesModel
    y: SeriesModel
    lambda_max: int = Field(default=3, ge=1)
    reference: Literal["fine", "analytic"] = "fine"
    config: ConfigModel = ConfigModel()
    time_augment: bool = False


class ConvergenceRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: int = Field(alias="lambda")
    sup_error: float


class ConvergenceResponse(BaseModel):
    rows: list[ConvergenceRow]


class HealthResponse(BaseModel):
    status: str
    version: str


def _augmented(series_models, flag: bool):
    series = [m.to_series() for m in series_models]
    if flag:
        series = [time_augment(s) for s in series]
    return series


def create_app() -> FastAPI:
    """Build the FastAPI application wrapping the library."""
    from importlib.metadata import PackageNotFoundError, version

    try:
        pkg_version = version("sigpde")
    except PackageNotFoundError:
        pkg_version = "unknown"

    app = FastAPI(title="sigpde", version=pkg_version)

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NumericalError)
    async def _numerical_error(request: Request, exc: NumericalError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=pkg_version)

    @app.post("/kernel", response_model=KernelResponse)
    def kernel(req: KernelRequest) -> KernelResponse:
        cfg = req.config.to_run_config()
        x, y = _augmented([req.x, req.y], req.time_augment)
        value = signature_pde_kernel(x, y, kernel=cfg.to_static_kernel(), lam=cfg.lam,
                                     scheme=cfg.scheme, rescale=cfg.rescale)
        return KernelResponse(value=value)

    @app.post("/gram", response_model=GramResponse)
    def gram_endpoint(req: GramRequest) -> GramResponse:
        cfg = req.config.to_run_config()
        xs = _augmented(req.xs, req.time_augment)
        ys = _augmented(req.ys, req.time_augment) if req.ys is not None else None
        matrix = gram(xs, ys, kernel=cfg.to_static_kernel(), lam=cfg.lam,
                      scheme=cfg.scheme, rescale=cfg.rescale, threads=cfg.threads)
        return GramResponse(values=matrix.values.tolist(), config=matrix.config)

    @app.post("/mmd", response_model=MmdResponse)
    def mmd(req: MmdRequest) -> MmdResponse:
        cfg = req.config.to_run_config()
        xs = _augmented(req.xs, req.time_augment)
        ys = _augmented(req.ys, req.time_augment)
        value = mmd_squared(xs, ys, variant=req.variant, kernel=cfg.to_static_kernel(),
                            lam=cfg.lam, scheme=cfg.scheme, rescale=cfg.rescale,
                            threads=cfg.threads)
        return MmdResponse(mmd_squared=value, variant=req.variant)

    @app.post("/reduce", response_model=ReduceResponse)
    def reduce(req: ReduceRequest) -> ReduceResponse:
        cfg = req.config.to_run_config()
        paths = _augmented(req.paths, req.time_augment)
        if req.alpha is None:
            ensemble = WeightedEnsemble.uniform(paths)
        else:
            ensemble = WeightedEnsemble(paths, req.alpha)
        result = reduce_ensemble(
            ensemble, penalty=req.penalty, support_size=req.support_size,
            kernel=cfg.to_static_kernel(), lam=cfg.lam, scheme=cfg.scheme,
            rescale=cfg.rescale, threads=cfg.threads, step=req.step,
            max_iter=req.max_iter, tol=req.tol,
        )
        return ReduceResponse(
            beta=result.beta.tolist(),
            support_indices=result.support.tolist(),
            loss_history=result.loss_history.tolist(),
            penalty_used=result.penalty,
            iterations=result.iterations,
            converged=result.converged,
            fixed_point_residual=result.fixed_point_residual,
        )

    @app.post("/simulate-fbm", response_model=FbmResponse)
    def simulate_fbm(req: FbmRequest) -> FbmResponse:
        paths = sample_fbm(req.hurst, req.length, count=req.count, seed=req.seed)
        return FbmResponse(paths=[SeriesModel.from_series(p) for p in paths])

    @app.post("/convergence", response_model=ConvergenceResponse)
    def convergence(req: ConvergenceRequest) -> ConvergenceResponse:
        cfg = req.config.to_run_config()
        x, y = _augmented([req.x, req.y], req.time_augment)
        table = convergence_study(x, y, kernel=cfg.to_static_kernel(),
                                  lambda_max=req.lambda_max, scheme=cfg.scheme,
                                  reference=req.reference, rescale=cfg.rescale)
        rows = [ConvergenceRow(lam=lam, sup_error=err) for lam, err in table]
        return ConvergenceResponse(rows=rows)

    return app
