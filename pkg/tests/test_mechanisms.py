"""Statistics, noise mechanisms and the inverse-sensitivity median sampler.

Brute-force oracles are deliberately independent of the implementation:
pure-python rank selection for the median, set-membership counting for path
lengths, and direct piece-weight normalization for the exponential sampler.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpresample import (
    BoundedRange,
    PrivacyBudget,
    gaussian_mean,
    gaussian_noise_sigma,
    global_sensitivity_mean,
    inverse_sensitivity_median,
    laplace_mean,
    mean,
    median,
    median_piece_decomposition,
    path_length_median,
    sample_laplace,
)

UNIT = BoundedRange(0.0, 1.0)


def brute_median(values):
    # lower-middle order statistic by explicit rank enumeration
    ordered = sorted(float(v) for v in values)
    return ordered[math.ceil(len(ordered) / 2) - 1]


def brute_path_length(values, t):
    m = brute_median(values)
    return sum(1 for x in values if (t < x <= m) or (m <= x < t))


def test_mean_and_median_examples():
    assert mean([1, 2, 3]) == 2
    assert median([1, 2, 3, 4, 5]) == 3
    assert median([1, 2, 3, 4]) == 2


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=25))
@settings(max_examples=100, deadline=None)
def test_median_matches_rank_enumeration(values):
    assert median(values) == brute_median(values)


def test_empty_dataset_is_rejected():
    for fn in (mean, median):
        with pytest.raises(ValueError):
            fn([])


def test_global_sensitivity_mean_values():
    assert global_sensitivity_mean(UNIT, 100) == pytest.approx(0.01)
    assert global_sensitivity_mean(BoundedRange(-6, 4), 1000) == pytest.approx(0.01)
    assert global_sensitivity_mean(UNIT, 1) == pytest.approx(1.0)


def test_global_sensitivity_is_worst_case_over_single_swaps():
    # enumerate every one-element replacement of a small dataset on a grid
    base = [0.1, 0.5, 0.9]
    worst = 0.0
    grid = np.linspace(0.0, 1.0, 101)
    for i in range(len(base)):
        for repl in grid:
            other = list(base)
            other[i] = float(repl)
            worst = max(worst, abs(np.mean(other) - np.mean(base)))
    assert worst == pytest.approx(global_sensitivity_mean(UNIT, len(base)), abs=1e-12)


def test_laplace_mean_tends_to_exact_mean_for_huge_epsilon():
    data = np.linspace(0, 1, 1000)
    got = laplace_mean(data, UNIT, PrivacyBudget(1e9), seed=1)
    assert got == pytest.approx(float(data.mean()), abs=1e-6)


def test_laplace_mean_is_deterministic_and_rejects_zero_epsilon():
    data = [0.2, 0.4, 0.9]
    assert laplace_mean(data, UNIT, PrivacyBudget(1.0), 7) == laplace_mean(
        data, UNIT, PrivacyBudget(1.0), 7
    )
    with pytest.raises(ValueError):
        laplace_mean(data, UNIT, PrivacyBudget(0.0), 7)


def test_laplace_noise_variance_matches_2b2():
    b = 0.001
    draws = sample_laplace(np.random.default_rng(3), b, size=2 * 10**5)
    assert draws.var() == pytest.approx(2 * b * b, rel=0.05)


def test_laplace_mean_clips_before_averaging():
    # values outside the range must not push the release beyond the clipped mean
    data = [10.0, -10.0, 0.5]
    got = laplace_mean(data, UNIT, PrivacyBudget(1e9), seed=2)
    assert got == pytest.approx(np.mean([1.0, 0.0, 0.5]), abs=1e-6)


def test_gaussian_sigma_formula():
    # sigma^2 = 2 ln(1.25/delta) * sens^2 / eps^2 at sens=0.01, eps=0.5, delta=1e-5
    sigma = gaussian_noise_sigma(UNIT, 100, PrivacyBudget(0.5, 1e-5))
    assert sigma**2 == pytest.approx(0.00938885521302755, rel=1e-12)


def test_gaussian_mean_parameter_domain():
    data = [0.1, 0.9]
    for eps, delta in [(0.0, 1e-5), (1.0, 1e-5), (1.5, 1e-5), (0.5, 0.0)]:
        with pytest.raises(ValueError):
            gaussian_mean(data, UNIT, PrivacyBudget(eps, delta), 1)
    # delta >= 1 is already rejected by the budget type itself
    with pytest.raises(ValueError):
        PrivacyBudget(0.5, 1.25)


def test_gaussian_noise_variance_monte_carlo():
    budget = PrivacyBudget(0.5, 1e-5)
    sigma = gaussian_noise_sigma(UNIT, 50, budget)
    data = np.full(50, 0.5)
    rng = np.random.default_rng(9)
    draws = np.array([gaussian_mean(data, UNIT, budget, rng) for _ in range(20000)])
    assert (draws - 0.5).var() == pytest.approx(sigma**2, rel=0.05)


def test_path_length_examples():
    data = [1, 2, 3, 4, 5]
    assert path_length_median(data, 3.0) == 0
    assert path_length_median(data, 3.5) == 1
    assert path_length_median(data, 1.5) == 2


@given(
    st.lists(st.integers(-5, 5), min_size=1, max_size=15),
    st.floats(-6, 6),
)
@settings(max_examples=200, deadline=None)
def test_path_length_matches_membership_oracle(values, t):
    assert path_length_median(values, t) == brute_path_length(values, t)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_path_length_monotone_away_from_median_and_zero_only_there(values):
    m = brute_median(values)
    for direction in (+1.0, -1.0):
        offsets = np.linspace(1e-6, 25.0, 24)
        lens = [path_length_median(values, m + direction * off) for off in offsets]
        assert all(b >= a for a, b in zip(lens, lens[1:]))
        assert all(v >= 1 for v in lens)
    assert path_length_median(values, m) == 0


def exact_piece_weights(values, lo, hi, eps):
    # independent normalizer: brute path lengths at midpoints of the pieces
    bounds = [lo] + sorted(values) + [hi]
    weights = []
    for a, b in zip(bounds, bounds[1:]):
        if b <= a:
            weights.append(0.0)
            continue
        weights.append((b - a) * math.exp(-eps * brute_path_length(values, (a + b) / 2) / 2))
    total = sum(weights)
    return [w / total for w in weights], bounds


def test_piece_decomposition_matches_brute_force():
    data = [1.0, 2.0, 3.0, 4.0, 5.0]
    expected, bounds = exact_piece_weights(data, 0.0, 6.0, eps=2.0)
    got_bounds, _, lens, probs = median_piece_decomposition(
        data, BoundedRange(0.0, 6.0), epsilon=2.0
    )
    assert np.allclose(got_bounds, bounds)
    assert np.allclose(probs, expected, atol=1e-12)
    assert list(lens) == [3, 2, 1, 1, 2, 3]


def test_tied_points_collapse_to_zero_weight_pieces():
    data = [1.0, 2.0, 2.0, 5.0]
    _, lengths, _, probs = median_piece_decomposition(data, BoundedRange(0, 6), 1.0)
    assert probs[lengths == 0].sum() == 0.0
    assert probs.sum() == pytest.approx(1.0)


def test_inverse_sensitivity_outputs_stay_in_range():
    rng = np.random.default_rng(4)
    data = rng.uniform(-2, 2, size=31)
    out = inverse_sensitivity_median(
        data, BoundedRange(-2, 2), PrivacyBudget(1.0), seed=8, size=500
    )
    assert np.all(out >= -2) and np.all(out <= 2)


def test_inverse_sensitivity_single_point_is_uniform():
    # With one data point every candidate needs exactly one change, so the
    # release law is uniform on the range no matter how large epsilon is.
    _, _, lens, probs = median_piece_decomposition(
        [0.5], BoundedRange(0.0, 1.0), epsilon=1e3
    )
    assert list(lens) == [1, 1]
    assert np.allclose(probs, [0.5, 0.5])
    draws = inverse_sensitivity_median(
        [0.5], BoundedRange(0.0, 1.0), PrivacyBudget(1e3), seed=2, size=10**5
    )
    ks = np.max(np.abs(np.sort(draws) - np.arange(1, draws.size + 1) / draws.size))
    assert ks < 0.01


def test_inverse_sensitivity_zero_epsilon_warns_and_is_uniform():
    with pytest.warns(UserWarning):
        draws = inverse_sensitivity_median(
            [1.0, 2.0, 3.0], BoundedRange(0.0, 6.0), PrivacyBudget(0.0), seed=3, size=10**5
        )
    scaled = np.sort(draws) / 6.0
    ks = np.max(np.abs(scaled - np.arange(1, draws.size + 1) / draws.size))
    assert ks < 0.01


def test_inverse_sensitivity_is_deterministic():
    data = [0.1, 0.4, 0.7]
    a = inverse_sensitivity_median(data, UNIT, PrivacyBudget(2.0), seed=5)
    b = inverse_sensitivity_median(data, UNIT, PrivacyBudget(2.0), seed=5)
    assert a == b
