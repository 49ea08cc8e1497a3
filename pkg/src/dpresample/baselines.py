"""Comparator interval constructions.

Three baselines: the non-private percentile bootstrap, sample splitting
(private or not) over disjoint near-equal parts, and a rank-targeted
exponential-mechanism median interval built from the classical binomial
order-statistic bounds with a granularity-widened output grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .mechanisms import BoundedRange, MechanismFn, PrivacyBudget
from .seeding import as_generator, as_seed_sequence
from .subsampling import (
    ConfidenceInterval,
    EstimateSet,
    SubsamplingPlan,
    ci_from_estimates,
    quantile_indices,
)


def bootstrap_replicates(n: int) -> int:
    """Replicate-count rule max{min{5*sqrt(n), 500}, 200}."""
    return int(max(min(5.0 * math.sqrt(n), 500.0), 200.0))


@dataclass(frozen=True)
class BootstrapPlan:
    T: int
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")
        if self.T < math.ceil(2.0 / self.alpha):
            raise ValueError("need T >= ceil(2/alpha)")


def bootstrap_ci(
    data, statistic, alpha: float, seed, replicates: int | None = None, pivot: bool = False
) -> ConfidenceInterval:
    """Percentile bootstrap over size-n with-replacement resamples.

    ``pivot=True`` switches to the centered-pivot variant (kept behind a flag;
    the plain percentile form is the reference construction).
    """
    values = np.asarray(data, dtype=float)
    if values.size < 2:
        raise ValueError("bootstrap needs at least two observations")
    plan = BootstrapPlan(T=replicates or bootstrap_replicates(values.size), alpha=alpha)
    rng = as_generator(seed)
    stats = np.empty(plan.T, dtype=float)
    for i in range(plan.T):
        idx = rng.integers(0, values.size, size=values.size)
        stats[i] = statistic(values[idx])
    stats.sort(kind="stable")
    k_lower, k_upper = quantile_indices(plan.T, plan.alpha)
    lo, hi = float(stats[k_lower - 1]), float(stats[k_upper - 1])
    if pivot:
        center = float(statistic(values))
        lo, hi = 2.0 * center - hi, 2.0 * center - lo
    return ConfidenceInterval(lower=lo, upper=hi, alpha=alpha)


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint partition into num_splits parts of size split_size or +1."""

    split_size: int
    num_splits: int
    tau_ratio: float
    alpha: float

    def __post_init__(self):
        if self.split_size < 1 or self.num_splits < 1:
            raise ValueError("split sizes and counts must be >= 1")
        if self.num_splits < math.ceil(2.0 / self.alpha):
            raise ValueError("need num_splits >= ceil(2/alpha)")
        if not 0.0 < self.tau_ratio <= 1.0:
            raise ValueError("tau_ratio must lie in (0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")

    @classmethod
    def sqrt_rule(cls, n: int, alpha: float) -> "SplitPlan":
        num = int(math.sqrt(n))
        base = n // num
        return cls(split_size=base, num_splits=num, tau_ratio=math.sqrt(base / n), alpha=alpha)

    @classmethod
    def log_rule(cls, n: int, alpha: float) -> "SplitPlan":
        target = 4.0 * n / math.log(n) ** 4
        num = max(math.ceil(2.0 / alpha), int(round(n / target)))
        base = n // num
        return cls(split_size=base, num_splits=num, tau_ratio=math.sqrt(base / n), alpha=alpha)


def partition_indices(n: int, plan: SplitPlan, rng) -> list[np.ndarray]:
    """Seeded permutation cut into disjoint parts with sizes in {m, m+1}."""
    if plan.split_size * plan.num_splits > n:
        raise ValueError("not enough data for the requested partition")
    perm = rng.permutation(n)
    base, leftover = divmod(n - plan.split_size * plan.num_splits, plan.num_splits)
    # Leftovers beyond a full extra round per split are not representable with
    # sizes in {m, m+1}; reject rather than silently drop data.
    if base > 0:
        raise ValueError("partition sizes would differ by more than one")
    sizes = [plan.split_size + (1 if i < leftover else 0) for i in range(plan.num_splits)]
    out, offset = [], 0
    for size in sizes:
        out.append(perm[offset : offset + size])
        offset += size
    return out


def sample_splitting_ci(
    data, plan: SplitPlan, estimator: MechanismFn, budget: PrivacyBudget, seed
) -> ConfidenceInterval:
    """Quantile CI from per-split estimates around a full-data center.

    Each individual appears in exactly one split, so every split-level call
    may spend the full variability half of the budget; the other half pays
    for the center estimate. No amplification or cross-split composition.
    """
    values = np.asarray(data, dtype=float)
    streams = as_seed_sequence(seed).spawn(2 + plan.num_splits)
    half = PrivacyBudget(budget.epsilon / 2.0, budget.delta / 2.0)
    parts = partition_indices(values.size, plan, np.random.default_rng(streams[0]))
    center = float(estimator(values, half, np.random.default_rng(streams[1])))
    estimates = np.sort(
        [
            estimator(values[part], half, np.random.default_rng(streams[2 + i]))
            for i, part in enumerate(parts)
        ],
        kind="stable",
    )
    ci_plan = SubsamplingPlan(
        n=values.size,
        m=plan.split_size,
        T=plan.num_splits,
        alpha=plan.alpha,
        tau_ratio=plan.tau_ratio,
        tau_m=math.sqrt(plan.split_size),
    )
    return ci_from_estimates(EstimateSet(center=center, estimates=estimates), ci_plan)


def median_rank_bounds(n: int, alpha: float) -> tuple[int, int]:
    """Largest symmetric order-statistic ranks covering the median at level 1-alpha.

    l is the largest k with BinomCDF(k-1; n, 1/2) <= alpha/2 and u = n + 1 - l.
    """
    half = alpha / 2.0
    lower = int(binom.ppf(half, n, 0.5))
    while lower >= 1 and binom.cdf(lower - 1, n, 0.5) > half:
        lower -= 1
    while binom.cdf(lower, n, 0.5) <= half:
        lower += 1
    if lower < 1:
        raise ValueError("sample too small for a two-sided median CI at this alpha")
    return lower, n + 1 - lower


def _rank_expmech_draw(snapped, lo, hi, rank, epsilon, rng):
    # Pieces between consecutive snapped order statistics; piece j holds
    # exactly j data points below it, so the rank loss there is |j - rank|.
    bounds = np.concatenate(([lo], snapped, [hi]))
    lengths = np.diff(bounds)
    loss = np.abs(np.arange(lengths.size) - rank)
    with np.errstate(divide="ignore"):
        log_w = np.where(lengths > 0, np.log(np.where(lengths > 0, lengths, 1.0)), -np.inf)
    log_w = log_w - 0.5 * epsilon * loss
    weights = np.exp(log_w - log_w.max())
    piece = rng.choice(weights.size, p=weights / weights.sum())
    return float(rng.uniform(bounds[piece], bounds[piece + 1]))


def expmech_median_ci(
    data,
    value_range: BoundedRange,
    budget: PrivacyBudget,
    alpha: float,
    granularity: float,
    seed,
) -> ConfidenceInterval:
    """Median CI from privately released binomial-rank order statistics.

    Each of the two rank targets is released with half the budget through an
    exponential mechanism whose piece boundaries are snapped to a granularity
    grid, trading rank accuracy for stability in the value domain.
    """
    if budget.epsilon <= 0:
        raise ValueError("expmech baseline needs epsilon > 0")
    if granularity <= 0:
        raise ValueError("granularity must be positive")
    values = np.sort(value_range.clip(np.asarray(data, dtype=float)))
    lower_rank, upper_rank = median_rank_bounds(values.size, alpha)
    if math.isinf(budget.epsilon):
        return ConfidenceInterval(
            lower=float(values[lower_rank - 1]),
            upper=float(values[upper_rank - 1]),
            alpha=alpha,
        )
    rng = as_generator(seed)
    snapped = value_range.lo + granularity * np.round(
        (values - value_range.lo) / granularity
    )
    snapped = np.clip(snapped, value_range.lo, value_range.hi)
    half_eps = budget.epsilon / 2.0
    lo = _rank_expmech_draw(
        snapped, value_range.lo, value_range.hi, lower_rank, half_eps, rng
    )
    hi = _rank_expmech_draw(
        snapped, value_range.lo, value_range.hi, upper_rank, half_eps, rng
    )
    if lo > hi:
        lo, hi = hi, lo
    return ConfidenceInterval(lower=lo, upper=hi, alpha=alpha)
