"""Exact (epsilon, delta) arithmetic for the subsampled-CI pipeline.

Covers amplification by subsampling without replacement, basic and advanced
composition, the end-to-end budget of one pipeline run (one full-sample call
plus T amplified subsample calls), and the numerical inversion that turns a
total budget into per-call budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .mechanisms import PrivacyBudget

CALIBRATION_MAX_EPSILON = 64.0


@dataclass(frozen=True)
class CompositionMode:
    kind: str  # "basic" | "advanced"
    delta_slack: float = 0.0

    def __post_init__(self):
        if self.kind not in ("basic", "advanced"):
            raise ValueError("composition mode must be 'basic' or 'advanced'")
        if self.kind == "advanced" and not self.delta_slack > 0:
            raise ValueError("advanced composition needs a positive delta slack")
        if self.kind == "basic" and self.delta_slack != 0.0:
            raise ValueError("basic composition takes no delta slack")


BASIC = CompositionMode("basic")


@dataclass(frozen=True)
class PrivSubBudget:
    """Per-call budgets plus the sampling geometry they compose over."""

    center: PrivacyBudget
    per_subsample: PrivacyBudget
    m: int
    n: int
    T: int
    mode: CompositionMode = BASIC

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")
        if self.T < 1:
            raise ValueError("need T >= 1")


def _cap_delta(delta: float) -> float:
    return min(delta, 1.0)


def amplify(budget: PrivacyBudget, m: int, n: int) -> PrivacyBudget:
    """Effective budget of one call run on a uniform size-m subsample."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    ratio = m / n
    eps = math.log1p(ratio * math.expm1(budget.epsilon))
    return PrivacyBudget(eps, ratio * budget.delta)


def compose_basic(budget: PrivacyBudget, k: int) -> PrivacyBudget:
    if k < 1:
        raise ValueError("need k >= 1")
    return PrivacyBudget(k * budget.epsilon, _cap_delta(k * budget.delta))


def compose_advanced(budget: PrivacyBudget, k: int, delta_slack: float) -> PrivacyBudget:
    if k < 1:
        raise ValueError("need k >= 1")
    if not 0.0 < delta_slack < 1.0:
        raise ValueError("delta slack must lie strictly in (0, 1)")
    eps = budget.epsilon * (
        math.sqrt(2.0 * k * math.log(1.0 / delta_slack))
        + k * math.tanh(budget.epsilon / 2.0)
    )
    return PrivacyBudget(eps, _cap_delta(k * budget.delta + delta_slack))


def privsub_total(b: PrivSubBudget) -> PrivacyBudget:
    """Total budget: T amplified subsample calls composed, plus the center call."""
    amped = amplify(b.per_subsample, b.m, b.n)
    if b.mode.kind == "basic":
        sub = compose_basic(amped, b.T)
    else:
        sub = compose_advanced(amped, b.T, b.mode.delta_slack)
    return PrivacyBudget(
        sub.epsilon + b.center.epsilon, _cap_delta(sub.delta + b.center.delta)
    )


def _subsample_epsilon_for(amped_eps_target: float, m: int, n: int) -> float:
    # Invert amplify in closed form: eps' = log1p((n/m) * expm1(eps_amp)).
    return math.log1p((n / m) * math.expm1(amped_eps_target))


def calibrate(
    target: PrivacyBudget,
    m: int,
    n: int,
    T: int,
    split: float,
    mode: CompositionMode | str = BASIC,
) -> PrivSubBudget:
    """Find per-call budgets whose composed total equals ``target``.

    The center call receives split * epsilon; the per-subsample epsilon is
    recovered by inverting the (strictly increasing) composed total. Deltas:
    the center gets split * delta and the rest goes to the subsample side,
    halved between the composition slack and the amplified deltas when the
    mode is advanced.
    """
    if target.epsilon <= 0:
        raise ValueError("target epsilon must be positive")
    if not 0.0 < split < 1.0:
        raise ValueError("split must lie strictly in (0, 1)")
    kind = mode.kind if isinstance(mode, CompositionMode) else str(mode)

    center = PrivacyBudget(split * target.epsilon, split * target.delta)
    sub_eps_budget = (1.0 - split) * target.epsilon
    sub_delta_budget = (1.0 - split) * target.delta

    if kind == "basic":
        eps_amp = sub_eps_budget / T
        delta_slack = 0.0
        amp_delta_budget = sub_delta_budget
        resolved = BASIC
    else:
        if not sub_delta_budget > 0:
            raise ValueError("advanced-mode calibration needs a positive target delta")
        delta_slack = sub_delta_budget / 2.0
        amp_delta_budget = sub_delta_budget / 2.0
        eps_amp = _bisect_increasing(
            lambda a: a
            * (math.sqrt(2.0 * T * math.log(1.0 / delta_slack)) + T * math.tanh(a / 2.0)),
            sub_eps_budget,
            0.0,
            CALIBRATION_MAX_EPSILON,
        )
        resolved = CompositionMode("advanced", delta_slack)

    per_eps = _subsample_epsilon_for(eps_amp, m, n)
    per_delta = amp_delta_budget * n / (T * m)
    return PrivSubBudget(
        center=center,
        per_subsample=PrivacyBudget(per_eps, per_delta),
        m=m,
        n=n,
        T=T,
        mode=resolved,
    )


def _bisect_increasing(f, target, lo, hi):
    if f(hi) < target:
        raise ValueError("target budget outside the calibration bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def with_center(b: PrivSubBudget, center: PrivacyBudget) -> PrivSubBudget:
    return replace(b, center=center)
