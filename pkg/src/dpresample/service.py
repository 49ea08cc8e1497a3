"""HTTP service exposing the interval, budget and experiment operations.

Each endpoint is a thin wrapper over a plain handler function; the CLI calls
the handlers directly when no remote server is configured, so results are
identical over HTTP and in process.
"""

from __future__ import annotations

import math
from typing import Literal

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .accountant import PrivacyBudget, amplify, calibrate, privsub_total
from .config import ExperimentConfig
from .harness import (
    CdfReport,
    CoverageReport,
    run_cdf_convergence,
    run_coverage,
)
from .mechanisms import MECHANISM_FACTORIES, BoundedRange, make_mechanism
from .subsampling import SubsamplingPlan, run_privsub


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BudgetRequest(_StrictModel):
    eps_total: float = Field(gt=0)
    delta_total: float = Field(default=0.0, ge=0, le=1)
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    T: int = Field(ge=1)
    split: float = Field(default=0.5, gt=0, lt=1)
    mode: Literal["basic", "advanced"] = "basic"


class BudgetResponse(BaseModel):
    eps_total: float
    delta_total: float
    m: int
    n: int
    T: int
    split: float
    mode: str
    eps_center: float
    delta_center: float
    eps_subsample: float
    delta_subsample: float
    eps_amp: float
    delta_amp: float
    delta_slack: float
    composed_eps: float
    composed_delta: float


def compute_budget(req: BudgetRequest) -> BudgetResponse:
    budgets = calibrate(
        PrivacyBudget(req.eps_total, req.delta_total),
        m=req.m, n=req.n, T=req.T, split=req.split, mode=req.mode,
    )
    amped = amplify(budgets.per_subsample, req.m, req.n)
    total = privsub_total(budgets)
    return BudgetResponse(
        eps_total=req.eps_total, delta_total=req.delta_total,
        m=req.m, n=req.n, T=req.T, split=req.split, mode=req.mode,
        eps_center=budgets.center.epsilon, delta_center=budgets.center.delta,
        eps_subsample=budgets.per_subsample.epsilon,
        delta_subsample=budgets.per_subsample.delta,
        eps_amp=amped.epsilon, delta_amp=amped.delta,
        delta_slack=budgets.mode.delta_slack,
        composed_eps=total.epsilon, composed_delta=total.delta,
    )


class CiRequest(_StrictModel):
    values: list[float] = Field(min_length=1)
    m: int = Field(ge=1)
    T: int = Field(default=50, ge=1)
    alpha: float = Field(default=0.1, gt=0, lt=1)
    eps_total: float = Field(default=5.0, gt=0)
    delta_total: float = Field(default=0.0, ge=0, le=1)
    split: float = Field(default=0.5, gt=0, lt=1)
    mode: Literal["basic", "advanced"] = "basic"
    mechanism: str = "inverse_sensitivity_median"
    range_lo: float | None = None
    range_hi: float | None = None
    tau_ratio: float | None = Field(default=None, gt=0, le=1)
    seed: int = 0


class CiResponse(BaseModel):
    lower: float
    upper: float
    alpha: float
    center: float
    estimates: list[float]
    cdf_points: list[float]
    budget: BudgetResponse


def compute_ci(req: CiRequest) -> CiResponse:
    if req.mechanism not in MECHANISM_FACTORIES:
        raise ValueError(f"unknown mechanism {req.mechanism!r}")
    n = len(req.values)
    plan = SubsamplingPlan(
        n=n, m=req.m, T=req.T, alpha=req.alpha,
        tau_ratio=req.tau_ratio if req.tau_ratio is not None else math.sqrt(req.m / n),
        tau_m=math.sqrt(req.m),
    )
    lo = req.range_lo if req.range_lo is not None else min(req.values)
    hi = req.range_hi if req.range_hi is not None else max(req.values)
    budget_req = BudgetRequest(
        eps_total=req.eps_total, delta_total=req.delta_total,
        m=req.m, n=n, T=req.T, split=req.split, mode=req.mode,
    )
    budgets = calibrate(
        PrivacyBudget(req.eps_total, req.delta_total),
        m=req.m, n=n, T=req.T, split=req.split, mode=req.mode,
    )
    mechanism = make_mechanism(req.mechanism, BoundedRange(lo, hi))
    result = run_privsub(req.values, plan, mechanism, budgets, req.seed)
    return CiResponse(
        lower=result.ci.lower, upper=result.ci.upper, alpha=result.ci.alpha,
        center=result.estimates.center,
        estimates=[float(v) for v in result.estimates.estimates],
        cdf_points=[float(v) for v in result.cdf.points],
        budget=compute_budget(budget_req),
    )


class CoverageRequest(_StrictModel):
    config: ExperimentConfig
    workers: int = Field(default=1, ge=1, le=64)


class CoverageRowModel(BaseModel):
    distribution_id: str
    n: int
    method_id: str
    replications: int
    coverage: float | None
    mean_width: float | None
    width_stderr: float | None
    coverage_stderr: float | None
    error: str = ""


class CoverageResponse(BaseModel):
    rows: list[CoverageRowModel]
    has_errors: bool


def _none_if_nan(x: float) -> float | None:
    return None if math.isnan(x) else x


def compute_coverage(req: CoverageRequest) -> CoverageResponse:
    report = run_coverage(req.config, workers=req.workers)
    return CoverageResponse(
        rows=[
            CoverageRowModel(
                distribution_id=r.distribution_id, n=r.n, method_id=r.method_id,
                replications=r.replications, coverage=_none_if_nan(r.coverage),
                mean_width=_none_if_nan(r.mean_width),
                width_stderr=_none_if_nan(r.width_stderr),
                coverage_stderr=_none_if_nan(r.coverage_stderr), error=r.error,
            )
            for r in report.rows
        ],
        has_errors=report.has_errors,
    )


class CdfRequest(_StrictModel):
    config: ExperimentConfig
    include_grid: bool = False


class CdfRowModel(BaseModel):
    distribution_id: str
    n: int
    method_id: str
    trial: int
    sup_distance: float | None
    grid: list[float] | None = None
    empirical: list[float] | None = None
    theoretical: list[float] | None = None
    error: str = ""


class CdfResponse(BaseModel):
    rows: list[CdfRowModel]
    has_errors: bool


def compute_cdf(req: CdfRequest) -> CdfResponse:
    report = run_cdf_convergence(req.config)
    rows = []
    for r in report.rows:
        row = CdfRowModel(
            distribution_id=r.distribution_id, n=r.n, method_id=r.method_id,
            trial=r.trial, sup_distance=_none_if_nan(r.sup_distance), error=r.error,
        )
        if req.include_grid and not r.error:
            row.grid = list(r.grid)
            row.empirical = list(r.empirical)
            row.theoretical = list(r.theoretical)
        rows.append(row)
    return CdfResponse(rows=rows, has_errors=report.has_errors)


def coverage_report_from_rows(rows: list[CoverageRowModel]) -> CoverageReport:
    """Rebuild the harness report from a service response (for CSV output)."""
    from .harness import CoverageRow

    def back(x):
        return math.nan if x is None else x

    return CoverageReport(
        rows=tuple(
            CoverageRow(
                distribution_id=r.distribution_id, n=r.n, method_id=r.method_id,
                replications=r.replications, coverage=back(r.coverage),
                mean_width=back(r.mean_width), width_stderr=back(r.width_stderr),
                coverage_stderr=back(r.coverage_stderr), error=r.error,
            )
            for r in rows
        )
    )


def cdf_report_from_rows(rows: list[CdfRowModel]) -> CdfReport:
    from .harness import CdfRow

    return CdfReport(
        rows=tuple(
            CdfRow(
                distribution_id=r.distribution_id, n=r.n, method_id=r.method_id,
                trial=r.trial,
                sup_distance=math.nan if r.sup_distance is None else r.sup_distance,
                grid=tuple(r.grid or ()), empirical=tuple(r.empirical or ()),
                theoretical=tuple(r.theoretical or ()), error=r.error,
            )
            for r in rows
        )
    )


app = FastAPI(title="dpresample", version=__version__)


@app.exception_handler(ValueError)
async def _domain_error(request, exc: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/budget", response_model=BudgetResponse)
def budget_endpoint(req: BudgetRequest) -> BudgetResponse:
    return compute_budget(req)


@app.post("/ci", response_model=CiResponse)
def ci_endpoint(req: CiRequest) -> CiResponse:
    return compute_ci(req)


@app.post("/coverage", response_model=CoverageResponse)
def coverage_endpoint(req: CoverageRequest) -> CoverageResponse:
    return compute_coverage(req)


@app.post("/cdf", response_model=CdfResponse)
def cdf_endpoint(req: CdfRequest) -> CdfResponse:
    return compute_cdf(req)
