"""
One-sample Kolmogorov-Smirnov test against fitted distributions.
"""
import math
from typing import Iterable, Protocol

import numpy as np
from pydantic import BaseModel, Field, model_validator

from analysis.distributions import Family, from_moments
from analysis.special import kolmogorov_sf
from errors import InputError
from settings import KS_SIGNIFICANCE

MIN_SAMPLES = 8


class CdfLike(Protocol):
    def cdf(self, x): ...


class KsResult(BaseModel):
    statistic: float = Field(ge=0.0, le=1.0)
    p_value: float = Field(ge=0.0, le=1.0)
    reject_at_5pct: bool
    sample_size: int = Field(ge=MIN_SAMPLES)

    @model_validator(mode="after")
    def check_decision(self) -> "KsResult":
        if self.reject_at_5pct != (self.p_value < KS_SIGNIFICANCE):
            raise ValueError("reject_at_5pct must equal p_value < 0.05")
        return self


def _validated_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if np.any(np.isnan(x)):
        raise InputError("Samples contain NaN")
    if x.shape[-1] < MIN_SAMPLES:
        raise InputError(f"KS test needs at least {MIN_SAMPLES} samples, got {x.shape[-1]}")
    return np.sort(x, axis=-1)


def ks_statistic(sorted_cdf_values) -> np.ndarray:
    """
    D = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n) along the last axis,
    where the input holds F evaluated at the sorted samples.
    """
    values = np.asarray(sorted_cdf_values, dtype=float)
    n = values.shape[-1]
    i = np.arange(1, n + 1)
    above = np.max(i / n - values, axis=-1)
    below = np.max(values - (i - 1) / n, axis=-1)
    return np.maximum(above, below)


def ks_p_value(statistic, n: int):
    """Asymptotic p-value with Stephens' correction, lam = (sqrt n + 0.12 + 0.11/sqrt n) D."""
    root = math.sqrt(n)
    return kolmogorov_sf((root + 0.12 + 0.11 / root) * np.asarray(statistic, dtype=float))


def ks_test(samples, reference: CdfLike) -> KsResult:
    """
    Test samples against a reference distribution (anything with a cdf method).

    Raises:
        InputError: NaN samples or fewer than MIN_SAMPLES of them
    """
    x = _validated_samples(np.ravel(samples))
    statistic = float(ks_statistic(np.asarray(reference.cdf(x))))
    p_value = float(ks_p_value(statistic, x.size))
    return KsResult(
        statistic=statistic,
        p_value=p_value,
        reject_at_5pct=p_value < KS_SIGNIFICANCE,
        sample_size=x.size,
    )


def batch_ks(samples, family: Family) -> tuple[np.ndarray, np.ndarray]:
    """
    Fit family by sample moments to every row of a (rows, n) array and test each
    row against its own fit. Returns (statistic, p_value) per row.
    """
    x = _validated_samples(np.atleast_2d(samples))
    dist = from_moments(family, x.mean(axis=-1), x.var(axis=-1, ddof=1)).with_trailing_axis()
    statistic = ks_statistic(dist.cdf(x))
    return statistic, np.asarray(ks_p_value(statistic, x.shape[-1]))


def fit_battery(
    samples,
    families: Iterable[Family] = (Family.GAMMA, Family.LOGNORMAL, Family.NORMAL),
) -> dict[Family, KsResult]:
    """
    Moment-match each family to the samples and KS-test the fit.

    Raises:
        DegenerateDistributionError: zero sample variance
    """
    x = _validated_samples(np.ravel(samples))
    mean, variance = x.mean(), x.var(ddof=1)
    results = {}
    for family in families:
        results[Family(family)] = ks_test(x, from_moments(family, mean, variance))
    return results
