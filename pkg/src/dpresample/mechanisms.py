"""Point statistics and their differentially private counterparts.

The non-private statistics are the arithmetic mean and the lower-middle
median. Private releases come from Laplace / Gaussian noise addition on
the clipped mean, and from the inverse-sensitivity (exponential) mechanism
for the median, which samples from the piecewise-constant density
proportional to exp(-eps * len(t) / 2) over a bounded output range.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .seeding import as_generator


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class BoundedRange:
    """Public clipping interval; fixes the global sensitivity of the mean."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("range must satisfy lo < hi")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def clip(self, values) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lo, self.hi)


# A mechanism handle: (values, budget, rng) -> private scalar estimate.
MechanismFn = Callable[[np.ndarray, PrivacyBudget, np.random.Generator], float]


def _require_nonempty(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("statistic of an empty dataset is undefined")
    return values


def mean(values) -> float:
    return float(_require_nonempty(values).mean())


def median(values) -> float:
    """Lower-middle median: the ceil(n/2)-th order statistic.

    Kept integer-rank-valued (no midpoint averaging for even n) so that the
    inverse-sensitivity rank calculus stays exact.
    """
    values = _require_nonempty(values)
    k = (values.size + 1) // 2 - 1
    return float(np.partition(values, k)[k])


def global_sensitivity_mean(value_range: BoundedRange, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return value_range.width / n


def sample_laplace(rng, scale: float, size=None):
    """Laplace(scale) via the inverse-CDF transform of a single uniform."""
    u = rng.uniform(size=size) - 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def laplace_mean(values, value_range: BoundedRange, budget: PrivacyBudget, seed) -> float:
    """Clipped mean plus Laplace noise at scale sensitivity/epsilon."""
    if budget.epsilon <= 0:
        raise ValueError("laplace mechanism needs epsilon > 0 (noise scale diverges)")
    values = value_range.clip(_require_nonempty(values))
    b = global_sensitivity_mean(value_range, values.size) / budget.epsilon
    return float(values.mean() + sample_laplace(as_generator(seed), b))


def gaussian_noise_sigma(value_range: BoundedRange, n: int, budget: PrivacyBudget) -> float:
    if not 0.0 < budget.epsilon < 1.0:
        raise ValueError("gaussian mechanism requires 0 < epsilon < 1")
    if not 0.0 < budget.delta < 1.0:
        raise ValueError("gaussian mechanism requires 0 < delta < 1")
    sens = global_sensitivity_mean(value_range, n)
    return math.sqrt(2.0 * math.log(1.25 / budget.delta)) * sens / budget.epsilon


def gaussian_mean(values, value_range: BoundedRange, budget: PrivacyBudget, seed) -> float:
    """Clipped mean plus centered normal noise at the calibrated sigma."""
    values = value_range.clip(_require_nonempty(values))
    sigma = gaussian_noise_sigma(value_range, values.size, budget)
    return float(values.mean() + as_generator(seed).normal(0.0, sigma))


def path_length_median(values, t) -> int:
    """Records that must change to move the median to t.

    Counts data points in (t, m] for t below the median m, in [m, t) for t
    above it, and nothing at t = m.
    """
    values = _require_nonempty(values)
    s = np.sort(values)
    m = s[(s.size + 1) // 2 - 1]
    return int(_path_lengths_sorted(s, m, np.asarray(t, dtype=float)))


def _path_lengths_sorted(sorted_values, m, t):
    below = np.searchsorted(sorted_values, m, side="right") - np.searchsorted(
        sorted_values, t, side="right"
    )
    above = np.searchsorted(sorted_values, t, side="left") - np.searchsorted(
        sorted_values, m, side="left"
    )
    return np.where(t < m, below, np.where(t > m, above, 0))


def median_piece_decomposition(values, value_range: BoundedRange, epsilon: float):
    """Constant pieces of the inverse-sensitivity density over the range.

    Returns (bounds, lengths, path_lengths, probabilities): ``bounds`` has one
    more entry than the others and brackets each piece. Zero-length pieces
    (ties among clipped data points) carry probability exactly 0.
    """
    values = value_range.clip(_require_nonempty(values))
    s = np.sort(values)
    m = s[(s.size + 1) // 2 - 1]
    bounds = np.concatenate(([value_range.lo], s, [value_range.hi]))
    lengths = np.diff(bounds)
    midpoints = 0.5 * (bounds[:-1] + bounds[1:])
    lens = _path_lengths_sorted(s, m, midpoints).astype(np.int64)
    with np.errstate(divide="ignore"):
        log_w = np.where(lengths > 0, np.log(np.where(lengths > 0, lengths, 1.0)), -np.inf)
    log_w = log_w - 0.5 * epsilon * lens
    shifted = np.exp(log_w - log_w.max())
    probs = shifted / shifted.sum()
    return bounds, lengths, lens, probs


def inverse_sensitivity_median(
    values, value_range: BoundedRange, budget: PrivacyBudget, seed, size=None
):
    """Exponential-mechanism median draw(s) from [lo, hi].

    At epsilon = 0 the density degenerates to the uniform law on the range,
    which is still a valid (if useless) release; a warning is emitted.
    """
    if budget.epsilon == 0:
        warnings.warn("epsilon = 0: inverse-sensitivity output is uniform on the range")
    rng = as_generator(seed)
    bounds, _, _, probs = median_piece_decomposition(values, value_range, budget.epsilon)
    piece = rng.choice(probs.size, size=size, p=probs)
    out = rng.uniform(bounds[piece], bounds[piece + 1])
    return float(out) if size is None else out


# ---------------------------------------------------------------------------
# Mechanism handles used by the subsampling and baseline drivers.


def laplace_mean_mechanism(value_range: BoundedRange) -> MechanismFn:
    def mech(values, budget, rng):
        return laplace_mean(values, value_range, budget, rng)

    return mech


def gaussian_mean_mechanism(value_range: BoundedRange) -> MechanismFn:
    def mech(values, budget, rng):
        return gaussian_mean(values, value_range, budget, rng)

    return mech


def inverse_sensitivity_median_mechanism(value_range: BoundedRange) -> MechanismFn:
    def mech(values, budget, rng):
        return inverse_sensitivity_median(values, value_range, budget, rng)

    return mech


def exact_mechanism(statistic: Callable[[np.ndarray], float]) -> MechanismFn:
    """Zero-noise handle: applies the plain statistic, ignoring budget and rng."""

    def mech(values, budget, rng):
        return float(statistic(values))

    return mech


MECHANISM_FACTORIES: dict[str, Callable[[BoundedRange], MechanismFn]] = {
    "laplace_mean": laplace_mean_mechanism,
    "gaussian_mean": gaussian_mean_mechanism,
    "inverse_sensitivity_median": inverse_sensitivity_median_mechanism,
}

STATISTICS: dict[str, Callable[[np.ndarray], float]] = {
    "mean": mean,
    "median": median,
}


def make_mechanism(name: str, value_range: BoundedRange) -> MechanismFn:
    try:
        return MECHANISM_FACTORIES[name](value_range)
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}") from None
