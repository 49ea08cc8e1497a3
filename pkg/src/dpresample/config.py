"""Experiment configuration schema.

Configs are JSON documents validated by pydantic models. The same models
back the HTTP service requests, the CLI and the in-process harness API.
"""

from __future__ import annotations

import math
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import distributions as dist
from .mechanisms import MECHANISM_FACTORIES, BoundedRange

M_RULES = ("n_2_3", "n_3_4", "sqrt")
COVERAGE_METHODS = (
    "privsub",
    "nonprivate_subsampling",
    "bootstrap",
    "sample_splitting",
    "expmech_style",
)
CDF_METHODS = ("privsub", "nonprivate_subsampling", "theoretical")
# Reserved for externally produced result files; never runnable here.
EXTERNAL_METHODS = ("blbquant",)

_MECHANISM_STATISTIC = {
    "laplace_mean": "mean",
    "gaussian_mean": "mean",
    "inverse_sensitivity_median": "median",
}


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TruncatedNormalModel(_StrictModel):
    kind: Literal["truncated_normal"]
    mu: float
    sigma: float = Field(gt=0)
    lo: float
    hi: float
    id: str | None = None

    def to_spec(self) -> dist.TruncatedNormal:
        return dist.TruncatedNormal(mu=self.mu, sigma=self.sigma, lo=self.lo, hi=self.hi)


class TruncatedExponentialModel(_StrictModel):
    kind: Literal["truncated_exponential"]
    rate: float = Field(gt=0)
    lo: float = 0.0
    hi: float
    id: str | None = None

    def to_spec(self) -> dist.TruncatedExponential:
        return dist.TruncatedExponential(rate=self.rate, lo=self.lo, hi=self.hi)


class TruncatedMixtureModel(_StrictModel):
    kind: Literal["truncated_mixture"]
    means: list[float] = Field(min_length=1)
    sigmas: list[float] = Field(min_length=1)
    weights: list[float] = Field(min_length=1)
    lo: float
    hi: float
    id: str | None = None

    def to_spec(self) -> dist.TruncatedMixture:
        return dist.TruncatedMixture(
            means=tuple(self.means),
            sigmas=tuple(self.sigmas),
            weights=tuple(self.weights),
            lo=self.lo,
            hi=self.hi,
        )


DistributionModel = Annotated[
    Union[TruncatedNormalModel, TruncatedExponentialModel, TruncatedMixtureModel],
    Field(discriminator="kind"),
]


class RangeModel(_StrictModel):
    lo: float
    hi: float

    def to_range(self) -> BoundedRange:
        return BoundedRange(lo=self.lo, hi=self.hi)


class MethodModel(_StrictModel):
    method: str
    id: str | None = None
    statistic: Literal["mean", "median"] = "median"
    mechanism: str | None = None
    range: RangeModel | None = None
    eps_total: float | None = Field(default=None, gt=0)
    delta_total: float = Field(default=0.0, ge=0, le=1)
    split: float = Field(default=0.5, gt=0, lt=1)
    composition: Literal["basic", "advanced"] = "basic"
    T: int | None = Field(default=None, ge=1)
    m: int | None = Field(default=None, ge=1)
    m_rule: Literal["n_2_3", "n_3_4", "sqrt"] = "n_2_3"
    tau_ratio: float | None = Field(default=None, gt=0, le=1)
    plan_rule: Literal["sqrt", "log4"] = "sqrt"
    replicates: int | None = Field(default=None, ge=1)
    pivot: bool = False
    granularity: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.method in EXTERNAL_METHODS:
            raise ValueError(
                f"method {self.method!r} is external-only; produce its CSV elsewhere "
                "and merge it with read_coverage_csv/merge_reports"
            )
        if self.method not in COVERAGE_METHODS + CDF_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "privsub":
            if self.mechanism is None or self.eps_total is None:
                raise ValueError("privsub needs 'mechanism' and 'eps_total'")
        if self.mechanism is not None:
            implied = _MECHANISM_STATISTIC.get(self.mechanism)
            if implied is not None and implied != self.statistic:
                raise ValueError(
                    f"mechanism {self.mechanism!r} estimates the {implied}, "
                    f"but statistic is {self.statistic!r}"
                )
        if self.method == "expmech_style":
            if self.eps_total is None:
                raise ValueError("expmech_style needs 'eps_total'")
            if self.statistic != "median":
                raise ValueError("expmech_style targets the median only")
        if self.method == "sample_splitting" and self.mechanism and self.eps_total is None:
            raise ValueError("private sample_splitting needs 'eps_total'")
        if self.mechanism is not None and self.mechanism not in MECHANISM_FACTORIES:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        return self

    def resolved_id(self) -> str:
        return self.id or self.method


class ExperimentConfig(_StrictModel):
    distributions: list[DistributionModel] = Field(min_length=1)
    sample_sizes: list[int] = Field(min_length=1)
    methods: list[MethodModel] = Field(min_length=1)
    alpha: float = Field(default=0.1, gt=0, lt=1)
    replications: int = Field(default=300, ge=1)
    root_seed: int = 0
    output_path: str = "report.csv"
    share_datasets: bool = True
    cdf_grid_points: int = Field(default=512, ge=2)

    @model_validator(mode="after")
    def _check(self):
        if any(n < 1 for n in self.sample_sizes):
            raise ValueError("sample sizes must be >= 1")
        ids = [m.resolved_id() for m in self.methods]
        if len(set(ids)) != len(ids):
            raise ValueError("method ids must be unique; set 'id' to disambiguate")
        labels = [distribution_id(d) for d in self.distributions]
        if len(set(labels)) != len(labels):
            raise ValueError("distribution ids must be unique; set 'id' to disambiguate")
        for label in labels + ids:
            if "," in label or "\n" in label:
                raise ValueError("ids must not contain commas or newlines")
        return self


def distribution_id(model) -> str:
    return model.id or dist.distribution_label(model.to_spec())


def resolve_m(method: MethodModel, n: int) -> int:
    if method.m is not None:
        return method.m
    if method.m_rule == "n_2_3":
        return subsample_size_two_thirds(n)
    if method.m_rule == "n_3_4":
        return max(1, math.ceil(round(n ** 0.75, 9)))
    return max(1, int(math.sqrt(n)))


def subsample_size_two_thirds(n: int) -> int:
    # Rounded before the ceiling so exact powers are not bumped up by
    # floating-point dust (e.g. 1000**(2/3) must stay 100).
    return max(1, math.ceil(round(n ** (2.0 / 3.0), 9)))


def default_granularity(n: int) -> float:
    return 1.0 / (10.0 * math.sqrt(n))
