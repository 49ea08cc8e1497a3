"""Seeded Monte Carlo experiments over (distribution x n x method) grids.

Coverage runs build one interval per replication on a fresh dataset and
report empirical coverage and width per grid cell; CDF runs measure the
sup-distance between a single run's empirical CDF and the normal limit of
the scaled sample median. Results are a pure function of (config, seed):
per-replication seeds are derived from stable labels, so worker count and
scheduling never change the output bytes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import distributions as dist
from .accountant import CompositionMode, calibrate
from .baselines import SplitPlan, bootstrap_ci, expmech_median_ci, sample_splitting_ci
from .config import (
    CDF_METHODS,
    COVERAGE_METHODS,
    ExperimentConfig,
    MethodModel,
    default_granularity,
    distribution_id,
    resolve_m,
)
from .mechanisms import (
    STATISTICS,
    BoundedRange,
    PrivacyBudget,
    exact_mechanism,
    make_mechanism,
)
from .seeding import derive_seed_sequence
from .subsampling import (
    SubsamplingPlan,
    cdf_eval,
    run_nonprivate_subsampling,
    run_privsub,
)

_FLOAT_FMT = "%.9g"

COVERAGE_COLUMNS = (
    "distribution_id",
    "n",
    "method_id",
    "replications",
    "coverage",
    "mean_width",
    "width_stderr",
    "coverage_stderr",
    "error",
)
CDF_COLUMNS = ("distribution_id", "n", "method_id", "trial", "sup_distance", "error")
CDF_GRID_COLUMNS = ("distribution_id", "n", "method_id", "trial", "x", "empirical", "theoretical")


@dataclass(frozen=True)
class CoverageRow:
    distribution_id: str
    n: int
    method_id: str
    replications: int
    coverage: float
    mean_width: float
    width_stderr: float
    coverage_stderr: float
    error: str = ""


@dataclass(frozen=True)
class CdfRow:
    distribution_id: str
    n: int
    method_id: str
    trial: int
    sup_distance: float
    grid: tuple[float, ...] = ()
    empirical: tuple[float, ...] = ()
    theoretical: tuple[float, ...] = ()
    error: str = ""


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple[CoverageRow, ...]

    @property
    def has_errors(self) -> bool:
        return any(r.error for r in self.rows)


@dataclass(frozen=True)
class CdfReport:
    rows: tuple[CdfRow, ...]

    @property
    def has_errors(self) -> bool:
        return any(r.error for r in self.rows)


# ---------------------------------------------------------------------------
# Single-interval construction for one method on one dataset.


def build_interval(method: MethodModel, spec, data, alpha: float, seed):
    """Run one method on one dataset and return its confidence interval."""
    values = np.asarray(data, dtype=float)
    n = values.size
    statistic = STATISTICS[method.statistic]
    value_range = (
        method.range.to_range() if method.range else BoundedRange(spec.lo, spec.hi)
    )

    if method.method == "bootstrap":
        return bootstrap_ci(
            values, statistic, alpha, seed, replicates=method.replicates, pivot=method.pivot
        )

    if method.method == "expmech_style":
        granularity = method.granularity or default_granularity(n)
        return expmech_median_ci(
            values, value_range, PrivacyBudget(method.eps_total, method.delta_total),
            alpha, granularity, seed,
        )

    if method.method == "sample_splitting":
        plan = _split_plan(method, n, alpha)
        if method.mechanism:
            estimator = make_mechanism(method.mechanism, value_range)
            budget = PrivacyBudget(method.eps_total, method.delta_total)
        else:
            estimator = exact_mechanism(statistic)
            budget = PrivacyBudget(0.0, 0.0)
        return sample_splitting_ci(values, plan, estimator, budget, seed)

    plan = _subsampling_plan(method, n, alpha)
    if method.method == "nonprivate_subsampling":
        return run_nonprivate_subsampling(values, plan, statistic, seed).ci
    if method.method == "privsub":
        budgets = calibrate(
            PrivacyBudget(method.eps_total, method.delta_total),
            m=plan.m,
            n=n,
            T=plan.T,
            split=method.split,
            mode=method.composition,
        )
        mechanism = make_mechanism(method.mechanism, value_range)
        return run_privsub(values, plan, mechanism, budgets, seed).ci
    raise ValueError(f"method {method.method!r} cannot produce a confidence interval")


def _subsampling_plan(method: MethodModel, n: int, alpha: float) -> SubsamplingPlan:
    m = resolve_m(method, n)
    T = method.T or 50
    plan = SubsamplingPlan.sqrt_rate(n, m, T, alpha)
    if method.tau_ratio is not None:
        plan = replace(plan, tau_ratio=method.tau_ratio)
    return plan


def _split_plan(method: MethodModel, n: int, alpha: float) -> SplitPlan:
    if method.m is not None and method.T is not None:
        ratio = method.tau_ratio or math.sqrt(method.m / n)
        return SplitPlan(
            split_size=method.m, num_splits=method.T, tau_ratio=ratio, alpha=alpha
        )
    if method.plan_rule == "log4":
        return SplitPlan.log_rule(n, alpha)
    return SplitPlan.sqrt_rule(n, alpha)


def _coverage_target(method: MethodModel, spec) -> float:
    if method.statistic == "median":
        return dist.true_median(spec)
    return dist.true_mean(spec)


def _data_seed(config: ExperimentConfig, dist_label: str, n: int, method_id: str, rep: int):
    if config.share_datasets:
        return derive_seed_sequence(config.root_seed, dist_label, n, "data", rep)
    return derive_seed_sequence(config.root_seed, dist_label, n, method_id, "data", rep)


def _run_seed(config: ExperimentConfig, dist_label: str, n: int, method_id: str, rep: int):
    return derive_seed_sequence(config.root_seed, dist_label, n, method_id, rep)


# ---------------------------------------------------------------------------
# Coverage grid.


@lru_cache(maxsize=8)
def _parse_config(config_json: str) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(config_json)


def _coverage_chunk(args):
    """One worker task: a contiguous replication range of one grid cell."""
    config_json, d_idx, n, m_idx, rep_lo, rep_hi = args
    config = _parse_config(config_json)
    model = config.distributions[d_idx]
    method = config.methods[m_idx]
    dist_label = distribution_id(model)
    method_id = method.resolved_id()
    spec = model.to_spec()
    try:
        target = _coverage_target(method, spec)
    except Exception as exc:  # degenerate spec: whole cell errors
        return (d_idx, n, m_idx), [(rep_lo, None, None, _describe(exc))]
    out = []
    for rep in range(rep_lo, rep_hi):
        try:
            data = dist.sample(spec, n, _data_seed(config, dist_label, n, method_id, rep))
            ci = build_interval(
                method, spec, data, config.alpha,
                _run_seed(config, dist_label, n, method_id, rep),
            )
            out.append((rep, bool(ci.contains(target)), float(ci.width), ""))
        except Exception as exc:
            out.append((rep, None, None, _describe(exc)))
            break  # a failing replication aborts the cell
    return (d_idx, n, m_idx), out


def _describe(exc: Exception) -> str:
    text = f"{type(exc).__name__}: {exc}"
    return text.replace(",", ";").replace("\n", " ")


def run_coverage(config: ExperimentConfig, workers: int = 1) -> CoverageReport:
    """Monte Carlo coverage/width table over the config grid."""
    _validate_methods(config, COVERAGE_METHODS, "coverage")
    tasks = []
    chunk = max(1, math.ceil(config.replications / max(1, workers) / 4))
    config_json = config.model_dump_json()
    for d_idx in range(len(config.distributions)):
        for n in config.sample_sizes:
            for m_idx in range(len(config.methods)):
                for lo in range(0, config.replications, chunk):
                    hi = min(lo + chunk, config.replications)
                    tasks.append((config_json, d_idx, n, m_idx, lo, hi))

    if workers <= 1:
        results = map(_coverage_chunk, tasks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_coverage_chunk, tasks, chunksize=1))

    by_cell: dict[tuple, list] = {}
    for key, chunk_rows in results:
        by_cell.setdefault(key, []).extend(chunk_rows)

    rows = []
    for d_idx, model in enumerate(config.distributions):
        label = distribution_id(model)
        for n in config.sample_sizes:
            for m_idx, method in enumerate(config.methods):
                cell = sorted(by_cell.get((d_idx, n, m_idx), []), key=lambda r: r[0])
                rows.append(_summarize_cell(label, n, method.resolved_id(), cell))
    return CoverageReport(rows=tuple(rows))


def _summarize_cell(label: str, n: int, method_id: str, cell) -> CoverageRow:
    failures = [(rep, msg) for rep, hit, width, msg in cell if msg]
    if failures:
        return CoverageRow(
            distribution_id=label, n=n, method_id=method_id, replications=0,
            coverage=math.nan, mean_width=math.nan, width_stderr=math.nan,
            coverage_stderr=math.nan, error=failures[0][1],
        )
    hits = np.array([hit for _, hit, _, _ in cell], dtype=float)
    widths = np.array([width for _, _, width, _ in cell], dtype=float)
    reps = hits.size
    coverage = float(hits.mean())
    coverage_stderr = math.sqrt(coverage * (1.0 - coverage) / reps)
    width_stderr = float(widths.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return CoverageRow(
        distribution_id=label, n=n, method_id=method_id, replications=reps,
        coverage=coverage, mean_width=float(widths.mean()),
        width_stderr=width_stderr, coverage_stderr=coverage_stderr,
    )


def _validate_methods(config: ExperimentConfig, allowed, mode: str):
    for method in config.methods:
        if method.method not in allowed:
            raise ValueError(f"method {method.method!r} is not valid for {mode} runs")


# ---------------------------------------------------------------------------
# CDF convergence.


def run_cdf_convergence(config: ExperimentConfig) -> CdfReport:
    """Sup-distance between empirical and limiting median CDFs per grid cell.

    ``config.replications`` counts independent seeded trials per cell; each
    trial is a single subsampling run, per the single-run protocol.
    """
    _validate_methods(config, CDF_METHODS, "cdf")
    rows = []
    for model in config.distributions:
        label = distribution_id(model)
        spec = model.to_spec()
        for n in config.sample_sizes:
            for method in config.methods:
                for trial in range(config.replications):
                    rows.append(_cdf_cell(config, model, spec, label, n, method, trial))
    return CdfReport(rows=tuple(rows))


def _cdf_cell(config, model, spec, label, n, method, trial) -> CdfRow:
    method_id = method.resolved_id()
    try:
        if method.statistic != "median":
            raise ValueError("cdf convergence is defined for the median statistic")
        limit_sd = dist.limiting_stddev_median(spec)
        if method.method == "theoretical":
            grid = np.linspace(-4.0 * limit_sd, 4.0 * limit_sd, config.cdf_grid_points)
            theo = np.asarray(dist.limiting_cdf_median(spec, grid))
            emp = theo
        else:
            data = dist.sample(spec, n, _data_seed(config, label, n, method_id, trial))
            seed = _run_seed(config, label, n, method_id, trial)
            plan = _subsampling_plan(method, n, config.alpha)
            if method.method == "privsub":
                budgets = calibrate(
                    PrivacyBudget(method.eps_total, method.delta_total),
                    m=plan.m, n=n, T=plan.T, split=method.split, mode=method.composition,
                )
                value_range = (
                    method.range.to_range() if method.range else BoundedRange(spec.lo, spec.hi)
                )
                mechanism = make_mechanism(method.mechanism, value_range)
                result = run_privsub(data, plan, mechanism, budgets, seed)
            else:
                result = run_nonprivate_subsampling(
                    data, plan, STATISTICS[method.statistic], seed
                )
            pts = result.cdf.points
            grid = np.linspace(
                min(float(pts[0]), -4.0 * limit_sd),
                max(float(pts[-1]), 4.0 * limit_sd),
                config.cdf_grid_points,
            )
            emp = np.asarray(cdf_eval(result.cdf, grid))
            theo = np.asarray(dist.limiting_cdf_median(spec, grid))
        sup = float(np.max(np.abs(emp - theo)))
        return CdfRow(
            distribution_id=label, n=n, method_id=method_id, trial=trial,
            sup_distance=sup, grid=tuple(map(float, grid)),
            empirical=tuple(map(float, emp)), theoretical=tuple(map(float, theo)),
        )
    except Exception as exc:
        return CdfRow(
            distribution_id=label, n=n, method_id=method_id, trial=trial,
            sup_distance=math.nan, error=_describe(exc),
        )


# ---------------------------------------------------------------------------
# CSV emission / ingestion.


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return _FLOAT_FMT % value
    return str(value)


def _write_rows(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path!r}: {exc}") from exc


def write_coverage_csv(report: CoverageReport, path) -> None:
    _write_rows(
        path,
        COVERAGE_COLUMNS,
        (
            (
                r.distribution_id, r.n, r.method_id, r.replications, r.coverage,
                r.mean_width, r.width_stderr, r.coverage_stderr, r.error,
            )
            for r in report.rows
        ),
    )


def write_cdf_csv(report: CdfReport, path) -> None:
    _write_rows(
        path,
        CDF_COLUMNS,
        (
            (r.distribution_id, r.n, r.method_id, r.trial, r.sup_distance, r.error)
            for r in report.rows
        ),
    )


def write_cdf_grid_csv(report: CdfReport, path) -> None:
    """Long-format per-point dump of the empirical and theoretical curves."""

    def rows():
        for r in report.rows:
            for x, e, t in zip(r.grid, r.empirical, r.theoretical):
                yield (r.distribution_id, r.n, r.method_id, r.trial, x, e, t)

    _write_rows(path, CDF_GRID_COLUMNS, rows())


def write_csv(report, path) -> None:
    if isinstance(report, CoverageReport):
        write_coverage_csv(report, path)
    elif isinstance(report, CdfReport):
        write_cdf_csv(report, path)
    else:
        raise TypeError(f"cannot serialize {type(report).__name__}")


def read_coverage_csv(path) -> CoverageReport:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != COVERAGE_COLUMNS:
            raise ValueError(f"unexpected coverage CSV header in {path!r}")
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            rows.append(
                CoverageRow(
                    distribution_id=parts[0], n=int(parts[1]), method_id=parts[2],
                    replications=int(parts[3]), coverage=float(parts[4]),
                    mean_width=float(parts[5]), width_stderr=float(parts[6]),
                    coverage_stderr=float(parts[7]), error=parts[8],
                )
            )
    return CoverageReport(rows=tuple(rows))


def merge_reports(*reports: CoverageReport) -> CoverageReport:
    """Concatenate coverage reports, e.g. to splice in externally computed rows."""
    rows: list[CoverageRow] = []
    for report in reports:
        rows.extend(report.rows)
    return CoverageReport(rows=tuple(rows))
