"""Confidence intervals from subsampled estimates.

One run computes a (possibly private) full-sample center, re-estimates the
statistic on T uniform size-m subsamples drawn without replacement, and turns
the sorted estimates into a quantile interval rescaled by the convergence-rate
ratio tau_m / tau_n. The same estimates also yield the centered-and-scaled
empirical CDF as a step function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .accountant import PrivSubBudget
from .mechanisms import MechanismFn, PrivacyBudget, exact_mechanism
from .seeding import as_seed_sequence


@dataclass(frozen=True)
class SubsamplingPlan:
    """Sampling geometry: n data points, T subsamples of size m.

    ``tau_ratio`` is tau_m / tau_n and rescales subsample-level deviations to
    the full-sample level; ``tau_m`` is the absolute subsample-level rate used
    to scale the empirical CDF. Both default to the sqrt-n convention.
    """

    n: int
    m: int
    T: int
    alpha: float
    tau_ratio: float
    tau_m: float

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")
        if self.T < math.ceil(2.0 / self.alpha):
            raise ValueError("need T >= ceil(2/alpha) so both quantile ranks exist")
        if not 0.0 < self.tau_ratio <= 1.0:
            raise ValueError("tau_ratio must lie in (0, 1]")
        if not self.tau_m > 0.0:
            raise ValueError("tau_m must be positive")

    @classmethod
    def sqrt_rate(cls, n: int, m: int, T: int, alpha: float) -> "SubsamplingPlan":
        return cls(
            n=n, m=m, T=T, alpha=alpha, tau_ratio=math.sqrt(m / n), tau_m=math.sqrt(m)
        )


@dataclass(frozen=True)
class EstimateSet:
    """Full-sample center plus the sorted subsample estimates."""

    center: float
    estimates: np.ndarray

    def __post_init__(self):
        est = np.asarray(self.estimates, dtype=float)
        if est.ndim != 1 or est.size < 1:
            raise ValueError("estimates must be a nonempty 1-d vector")
        if np.any(np.diff(est) < 0):
            raise ValueError("estimates must be sorted nondecreasing")
        object.__setattr__(self, "estimates", est)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("interval endpoints out of order")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step function through the scaled centered estimates."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        if pts.size < 1:
            raise ValueError("an empirical CDF needs at least one point")
        object.__setattr__(self, "points", pts)


class SubsamplingResult(NamedTuple):
    ci: ConfidenceInterval
    cdf: EmpiricalCdf
    estimates: EstimateSet


def draw_subsample(n: int, m: int, seed) -> np.ndarray:
    """m distinct indices in [0, n), uniform over all size-m subsets."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(
        as_seed_sequence(seed)
    )
    return rng.choice(n, size=m, replace=False)


def quantile_indices(T: int, alpha: float) -> tuple[int, int]:
    """1-based ranks floor((alpha/2)T) and ceil((1-alpha/2)T), clamped to [1, T]."""
    k_lower = max(1, math.floor((alpha / 2.0) * T))
    k_upper = min(T, math.ceil((1.0 - alpha / 2.0) * T))
    return k_lower, k_upper


def ci_from_estimates(es: EstimateSet, plan: SubsamplingPlan) -> ConfidenceInterval:
    if es.estimates.size != plan.T:
        raise ValueError("estimate count does not match the plan's T")
    k_lower, k_upper = quantile_indices(plan.T, plan.alpha)
    c = es.center
    lower = c - plan.tau_ratio * (c - es.estimates[k_lower - 1])
    upper = c + plan.tau_ratio * (es.estimates[k_upper - 1] - c)
    return ConfidenceInterval(lower=float(lower), upper=float(upper), alpha=plan.alpha)


def empirical_cdf(es: EstimateSet, tau: float) -> EmpiricalCdf:
    return EmpiricalCdf(points=tau * (es.estimates - es.center))


def cdf_eval(cdf: EmpiricalCdf, x):
    """Fraction of stored points <= x."""
    counts = np.searchsorted(cdf.points, np.asarray(x, dtype=float), side="right")
    out = counts / cdf.points.size
    return float(out) if out.ndim == 0 else out


def cdf_quantile(cdf: EmpiricalCdf, q: float) -> float:
    """Generalized inverse: the smallest point with CDF mass >= q."""
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    rank = math.ceil(q * cdf.points.size)
    return float(cdf.points[rank - 1])


def run_privsub(
    data,
    plan: SubsamplingPlan,
    mechanism: MechanismFn,
    budgets: PrivSubBudget,
    seed,
) -> SubsamplingResult:
    """Private center, T private subsample estimates, quantile CI and CDF.

    Each subsample call runs the mechanism at the raw per-subsample budget;
    amplification by subsampling is an accounting statement about the run,
    not a change to the mechanism.
    """
    values = np.asarray(data, dtype=float)
    if values.size != plan.n:
        raise ValueError("data length does not match the plan's n")
    if (budgets.m, budgets.n, budgets.T) != (plan.m, plan.n, plan.T):
        raise ValueError("budget geometry (m, n, T) disagrees with the plan")
    return _run_subsampling(
        values, plan, mechanism, budgets.center, budgets.per_subsample, seed
    )


def run_nonprivate_subsampling(
    data, plan: SubsamplingPlan, statistic: Callable[[np.ndarray], float], seed
) -> SubsamplingResult:
    """Subsampling CI with the exact statistic in place of a private mechanism."""
    values = np.asarray(data, dtype=float)
    if values.size != plan.n:
        raise ValueError("data length does not match the plan's n")
    zero = PrivacyBudget(0.0, 0.0)
    return _run_subsampling(values, plan, exact_mechanism(statistic), zero, zero, seed)


def _run_subsampling(values, plan, mechanism, center_budget, sub_budget, seed):
    # Fixed stream layout (center, then per-i subsample/mechanism pairs) so a
    # zero-noise mechanism reproduces the non-private run bit for bit.
    streams = as_seed_sequence(seed).spawn(1 + 2 * plan.T)
    center = float(mechanism(values, center_budget, np.random.default_rng(streams[0])))
    estimates = np.empty(plan.T, dtype=float)
    for i in range(plan.T):
        idx = draw_subsample(plan.n, plan.m, np.random.default_rng(streams[1 + 2 * i]))
        estimates[i] = mechanism(
            values[idx], sub_budget, np.random.default_rng(streams[2 + 2 * i])
        )
    es = EstimateSet(center=center, estimates=np.sort(estimates, kind="stable"))
    return SubsamplingResult(
        ci=ci_from_estimates(es, plan),
        cdf=empirical_cdf(es, plan.tau_m),
        estimates=es,
    )
