"""Distribution sampling, exact CDF/density values and ground-truth targets.

Expected constants are frozen from independent oracles: scipy.integrate.quad
for normalization and moments, and a standalone bisection on the closed-form
CDFs for quantiles.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from dpresample import (
    TruncatedExponential,
    TruncatedMixture,
    TruncatedNormal,
    cdf,
    density_at,
    limiting_cdf_median,
    sample,
    true_mean,
    true_median,
    true_quantile,
)

NORMAL = TruncatedNormal(mu=0.0, sigma=2.0, lo=-6.0, hi=4.0)
NORMAL_SYM = TruncatedNormal(mu=0.0, sigma=2.0, lo=-6.0, hi=6.0)
EXPONENTIAL = TruncatedExponential(rate=1.0, lo=0.0, hi=5.0)
MIXTURE = TruncatedMixture(
    means=(-1.5, 1.5), sigmas=(1.0, 1.0), weights=(0.5, 0.5), lo=-5.0, hi=5.0
)
ALL_SPECS = [NORMAL, NORMAL_SYM, EXPONENTIAL, MIXTURE]

# Oracle values (quad / closed form, computed independently of the library):
# mean of Exp(1) on [0,5]  = 1 - 5 e^-5 / (1 - e^-5)
TRUNC_EXP_MEAN = 0.9660817254684788
# median of Exp(1) on [0,5]: solves (1 - e^-x) / (1 - e^-5) = 1/2
TRUNC_EXP_MEDIAN = 0.6864318320708271
# density of N(0, 2^2) truncated to [-6, 6] at x = 0
SYM_NORMAL_DENSITY_0 = 0.20001112946064242


def test_samples_respect_truncation_support():
    data = sample(NORMAL, 5, seed=1)
    assert np.all(data.values >= -6.0) and np.all(data.values <= 4.0)
    assert len(data) == 5


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_sampling_is_deterministic_per_seed(spec):
    a = sample(spec, 1, seed=42).values
    b = sample(spec, 1, seed=42).values
    assert a[0] == b[0]
    c = sample(spec, 1, seed=43).values
    assert a[0] != c[0]


def test_truncated_exponential_sample_mean_matches_analytic():
    data = sample(EXPONENTIAL, 10**5, seed=5)
    se = data.values.std(ddof=1) / math.sqrt(data.values.size)
    assert abs(data.values.mean() - TRUNC_EXP_MEAN) < 3 * se
    assert true_mean(EXPONENTIAL) == pytest.approx(TRUNC_EXP_MEAN, rel=1e-12)


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_true_mean_matches_numerical_integration(spec):
    oracle, _ = integrate.quad(lambda x: x * density_at(spec, x), spec.lo, spec.hi)
    assert true_mean(spec) == pytest.approx(oracle, abs=1e-8)


def test_symmetric_truncation_median_is_zero():
    assert true_quantile(NORMAL_SYM, 0.5) == pytest.approx(0.0, abs=1e-9)
    assert true_quantile(MIXTURE, 0.5) == pytest.approx(0.0, abs=1e-9)


def test_truncated_exponential_median():
    got = true_quantile(EXPONENTIAL, 0.5)
    assert got == pytest.approx(TRUNC_EXP_MEDIAN, abs=1e-9)
    # independent bracketed bisection against the closed-form truncated CDF
    lo, hi = 0.0, 5.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if (1 - math.exp(-mid)) / (1 - math.exp(-5)) < 0.5:
            lo = mid
        else:
            hi = mid
    assert got == pytest.approx((lo + hi) / 2, abs=1e-9)


def test_density_values_against_closed_forms():
    assert density_at(NORMAL_SYM, 0.0) == pytest.approx(SYM_NORMAL_DENSITY_0, rel=1e-12)
    assert density_at(EXPONENTIAL, 0.0) == pytest.approx(1.0 / (1.0 - math.exp(-5)), rel=1e-12)


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_density_integrates_to_one(spec):
    total, _ = integrate.quad(lambda x: density_at(spec, x), spec.lo, spec.hi)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_density_rejects_points_outside_support():
    with pytest.raises(ValueError):
        density_at(NORMAL, 4.5)
    with pytest.raises(ValueError):
        density_at(EXPONENTIAL, -0.1)


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_empirical_cdf_within_dkw_band(spec):
    values = np.sort(sample(spec, 10**5, seed=11).values)
    grid = cdf(spec, values)
    ranks = np.arange(1, values.size + 1) / values.size
    kolmogorov = max(np.max(np.abs(ranks - grid)), np.max(np.abs(ranks - 1 / values.size - grid)))
    assert kolmogorov < 0.01


@given(
    q1=st.floats(0.01, 0.98),
    gap=st.floats(0.001, 0.01),
    idx=st.integers(0, len(ALL_SPECS) - 1),
)
@settings(max_examples=40, deadline=None)
def test_quantiles_are_strictly_increasing(q1, gap, idx):
    spec = ALL_SPECS[idx]
    assert true_quantile(spec, q1) < true_quantile(spec, q1 + gap)


def test_quantile_rejects_degenerate_levels():
    for q in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            true_quantile(NORMAL, q)


def test_limiting_cdf_median_basics():
    for spec in ALL_SPECS:
        assert limiting_cdf_median(spec, 0.0) == pytest.approx(0.5)
        assert limiting_cdf_median(spec, 1e9) == pytest.approx(1.0)
        assert limiting_cdf_median(spec, -1e9) == pytest.approx(0.0, abs=1e-12)
    # oracle: Phi(2 f(median) x) with f from the quad-checked density
    f0 = density_at(NORMAL_SYM, true_median(NORMAL_SYM))
    assert limiting_cdf_median(NORMAL_SYM, 1.0) == pytest.approx(
        norm.cdf(2.0 * f0), rel=1e-9
    )


def test_limiting_cdf_median_is_nondecreasing():
    xs = np.linspace(-20, 20, 401)
    ys = limiting_cdf_median(NORMAL, xs)
    assert np.all(np.diff(ys) >= 0)


def test_invalid_specs_are_rejected_at_construction():
    with pytest.raises(ValueError):
        TruncatedNormal(mu=0, sigma=0.0, lo=-1, hi=1)
    with pytest.raises(ValueError):
        TruncatedNormal(mu=0, sigma=1.0, lo=2, hi=-2)
    with pytest.raises(ValueError):
        TruncatedExponential(rate=-1.0, lo=0, hi=5)
    with pytest.raises(ValueError):
        TruncatedMixture(means=(0,), sigmas=(1,), weights=(0.7,), lo=-1, hi=1)
    with pytest.raises(ValueError):
        TruncatedMixture(means=(0, 1), sigmas=(1, 1), weights=(0.5, 0.5, 0.0), lo=-1, hi=1)


def test_sample_rejects_bad_sizes():
    with pytest.raises(ValueError):
        sample(NORMAL, 0, seed=1)
