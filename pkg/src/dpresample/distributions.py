"""Truncated synthetic populations with analytically known targets.

Three families are supported, each restricted to a finite interval
``[lo, hi]``: a truncated normal, a truncated exponential and a truncated
normal mixture. All of them expose exact CDF/density evaluations, which
gives closed-form ground truth (true quantiles, true means, the limiting
law of the sample median) for coverage experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .seeding import as_generator

QUANTILE_TOL = 1e-10


@dataclass(frozen=True)
class TruncatedNormal:
    mu: float
    sigma: float
    lo: float
    hi: float

    def __post_init__(self):
        _check_bounds(self.lo, self.hi)
        if self.sigma <= 0:
            raise ValueError("sigma must be strictly positive")

    def _base_cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def _base_pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))


@dataclass(frozen=True)
class TruncatedExponential:
    rate: float
    lo: float
    hi: float

    def __post_init__(self):
        _check_bounds(self.lo, self.hi)
        if self.rate <= 0:
            raise ValueError("rate must be strictly positive")
        if self.lo < 0:
            raise ValueError("exponential support starts at 0; lo must be >= 0")

    def _base_cdf(self, x):
        return -np.expm1(-self.rate * np.asarray(x, dtype=float))

    def _base_pdf(self, x):
        return self.rate * np.exp(-self.rate * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TruncatedMixture:
    means: tuple[float, ...]
    sigmas: tuple[float, ...]
    weights: tuple[float, ...]
    lo: float
    hi: float

    def __post_init__(self):
        _check_bounds(self.lo, self.hi)
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "sigmas", tuple(float(v) for v in self.sigmas))
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        if not (len(self.means) == len(self.sigmas) == len(self.weights)) or not self.means:
            raise ValueError("means, sigmas and weights must have equal nonzero length")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be strictly positive")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    def _base_cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=float)
        for w, m, s in zip(self.weights, self.means, self.sigmas):
            out = out + w * ndtr((x - m) / s)
        return out

    def _base_pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=float)
        for w, m, s in zip(self.weights, self.means, self.sigmas):
            z = (x - m) / s
            out = out + w * np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi))
        return out


DistributionSpec = TruncatedNormal | TruncatedExponential | TruncatedMixture


def _check_bounds(lo, hi):
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("truncation bounds must be finite with lo < hi")


@dataclass(frozen=True)
class Dataset:
    """An i.i.d. sample, optionally tagged with the spec that generated it."""

    values: np.ndarray
    spec: DistributionSpec | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("a dataset is a nonempty 1-d vector")
        object.__setattr__(self, "values", values)
        if self.spec is not None:
            if values.min() < self.spec.lo or values.max() > self.spec.hi:
                raise ValueError("values fall outside the generating spec's support")

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.values.astype(dtype)
        return self.values


def _mass(spec: DistributionSpec) -> float:
    return float(spec._base_cdf(spec.hi) - spec._base_cdf(spec.lo))


def cdf(spec: DistributionSpec, x):
    """Truncated CDF, clamped to [0, 1] outside the support."""
    x = np.asarray(x, dtype=float)
    lo_mass = spec._base_cdf(spec.lo)
    raw = (spec._base_cdf(np.clip(x, spec.lo, spec.hi)) - lo_mass) / _mass(spec)
    out = np.where(x < spec.lo, 0.0, np.where(x > spec.hi, 1.0, raw))
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def density_at(spec: DistributionSpec, x):
    """Truncated density at x; raises if x is outside [lo, hi]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < spec.lo) or np.any(x > spec.hi):
        raise ValueError(f"x outside truncation support [{spec.lo}, {spec.hi}]")
    out = spec._base_pdf(x) / _mass(spec)
    return float(out) if out.ndim == 0 else out


def sample(spec: DistributionSpec, n: int, seed) -> Dataset:
    """Draw n i.i.d. values from the truncated law. Deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    if isinstance(spec, TruncatedMixture):
        values = _sample_mixture(spec, n, rng)
    else:
        values = _sample_inverse_cdf(spec, n, rng)
    return Dataset(values=values, spec=spec)


def _sample_inverse_cdf(spec, n, rng):
    u = rng.uniform(size=n)
    lo_mass = float(spec._base_cdf(spec.lo))
    p = lo_mass + u * (float(spec._base_cdf(spec.hi)) - lo_mass)
    if isinstance(spec, TruncatedNormal):
        values = spec.mu + spec.sigma * ndtri(p)
    else:
        values = -np.log1p(-p) / spec.rate
    return np.clip(values, spec.lo, spec.hi)


def _sample_mixture(spec, n, rng):
    # Component selection followed by rejection against [lo, hi]; acceptance
    # stays high for any reasonable truncation of the mixture bulk.
    means = np.asarray(spec.means)
    sigmas = np.asarray(spec.sigmas)
    weights = np.asarray(spec.weights)
    out = np.empty(n, dtype=float)
    filled = 0
    while filled < n:
        need = n - filled
        batch = need + max(16, need // 2)
        comp = rng.choice(len(weights), size=batch, p=weights)
        x = rng.normal(means[comp], sigmas[comp])
        accepted = x[(x >= spec.lo) & (x <= spec.hi)]
        take = min(need, accepted.size)
        out[filled : filled + take] = accepted[:take]
        filled += take
    return out


def true_quantile(spec: DistributionSpec, q: float) -> float:
    """Invert the truncated CDF by bisection to absolute tolerance 1e-10."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    lo, hi = spec.lo, spec.hi
    while hi - lo > QUANTILE_TOL:
        mid = 0.5 * (lo + hi)
        if cdf(spec, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def true_median(spec: DistributionSpec) -> float:
    return true_quantile(spec, 0.5)


def true_mean(spec: DistributionSpec) -> float:
    """Exact mean of the truncated law (closed form per family)."""
    if isinstance(spec, TruncatedNormal):
        return _normal_component_mean(spec.mu, spec.sigma, spec.lo, spec.hi)[0]
    if isinstance(spec, TruncatedExponential):
        lam = spec.rate
        num = (spec.lo + 1.0 / lam) * math.exp(-lam * spec.lo) - (
            spec.hi + 1.0 / lam
        ) * math.exp(-lam * spec.hi)
        den = math.exp(-lam * spec.lo) - math.exp(-lam * spec.hi)
        return num / den
    total_mass = 0.0
    total_first_moment = 0.0
    for w, m, s in zip(spec.weights, spec.means, spec.sigmas):
        mean_k, mass_k = _normal_component_mean(m, s, spec.lo, spec.hi)
        total_mass += w * mass_k
        total_first_moment += w * mass_k * mean_k
    return total_first_moment / total_mass


def _normal_component_mean(mu, sigma, lo, hi):
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    phi_a = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
    phi_b = math.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi)
    mass = float(ndtr(b) - ndtr(a))
    return mu + sigma * (phi_a - phi_b) / mass, mass


def limiting_stddev_median(spec: DistributionSpec) -> float:
    """Standard deviation of the sqrt(n)-scaled centered sample median."""
    f = density_at(spec, true_median(spec))
    if f <= 0.0:
        raise ValueError("zero density at the median; the limit is degenerate")
    return 1.0 / (2.0 * f)


def limiting_cdf_median(spec: DistributionSpec, x):
    """CDF of the normal limit of the sqrt(n)-scaled centered sample median."""
    sd = limiting_stddev_median(spec)
    out = ndtr(np.asarray(x, dtype=float) / sd)
    return float(out) if out.ndim == 0 else out


def distribution_label(spec: DistributionSpec) -> str:
    """Compact comma-free identifier used in report rows."""
    if isinstance(spec, TruncatedNormal):
        body = f"mu={spec.mu:g};sigma={spec.sigma:g}"
        name = "truncated_normal"
    elif isinstance(spec, TruncatedExponential):
        body = f"rate={spec.rate:g}"
        name = "truncated_exponential"
    else:
        body = (
            "means=" + "|".join(f"{v:g}" for v in spec.means)
            + ";sigmas=" + "|".join(f"{v:g}" for v in spec.sigmas)
            + ";weights=" + "|".join(f"{v:g}" for v in spec.weights)
        )
        name = "truncated_mixture"
    return f"{name}({body};lo={spec.lo:g};hi={spec.hi:g})"
