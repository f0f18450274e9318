"""
Moment-matched gamma, lognormal and normal distributions.

Parameters are numpy arrays, so one FittedDistribution can describe every user
of a network at once; evaluation broadcasts parameters against the argument.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from analysis import special
from errors import DegenerateDistributionError, InputError


class Family(str, Enum):
    GAMMA = "gamma"
    LOGNORMAL = "lognormal"
    NORMAL = "normal"


@dataclass(frozen=True)
class FittedDistribution:
    """
    params holds (shape, scale) for GAMMA, (log-mean, log-std) for LOGNORMAL and
    (mean, std) for NORMAL.
    """

    family: Family
    params: tuple[np.ndarray, np.ndarray]
    matched_mean: np.ndarray
    matched_variance: np.ndarray

    def with_trailing_axis(self) -> "FittedDistribution":
        """Same distributions with params of shape (..., 1), ready to broadcast against a grid."""
        first, second = self.params
        return FittedDistribution(
            family=self.family,
            params=(np.asarray(first)[..., None], np.asarray(second)[..., None]),
            matched_mean=np.asarray(self.matched_mean)[..., None],
            matched_variance=np.asarray(self.matched_variance)[..., None],
        )

    def ravel(self) -> "FittedDistribution":
        first, second = self.params
        return FittedDistribution(
            family=self.family,
            params=(np.ravel(first), np.ravel(second)),
            matched_mean=np.ravel(self.matched_mean),
            matched_variance=np.ravel(self.matched_variance),
        )

    def mean(self):
        first, second = self.params
        if self.family == Family.GAMMA:
            return first * second
        if self.family == Family.LOGNORMAL:
            return np.exp(first + 0.5 * second**2)
        return first

    def variance(self):
        first, second = self.params
        if self.family == Family.GAMMA:
            return first * second**2
        if self.family == Family.LOGNORMAL:
            return np.expm1(second**2) * np.exp(2.0 * first + second**2)
        return second**2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        first, second = self.params
        if self.family == Family.GAMMA:
            return special.gamma_pq(first, x / second)[0]
        if self.family == Family.LOGNORMAL:
            return _lognormal_cdf(first, second, x, upper=False)
        return np.asarray(special.normal_cdf((x - first) / second))

    def sf(self, x):
        """1 - cdf(x), evaluated directly so small tail probabilities keep relative accuracy."""
        x = np.asarray(x, dtype=float)
        first, second = self.params
        if self.family == Family.GAMMA:
            return special.gamma_pq(first, x / second)[1]
        if self.family == Family.LOGNORMAL:
            return _lognormal_cdf(first, second, x, upper=True)
        return np.asarray(special.normal_cdf((first - x) / second))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        first, second = self.params
        if self.family == Family.GAMMA:
            return np.asarray(np.exp(special.gamma_log_pdf(first, x / second))) / second
        if self.family == Family.LOGNORMAL:
            positive = x > 0
            z = (np.log(np.where(positive, x, 1.0)) - first) / second
            density = np.asarray(special.normal_pdf(z)) / (np.where(positive, x, 1.0) * second)
            return np.where(positive, density, 0.0)
        return np.asarray(special.normal_pdf((x - first) / second)) / second

    def quantile(self, u):
        first, second = self.params
        if self.family == Family.GAMMA:
            return np.asarray(special.gamma_quantile(first, u)) * second
        z = np.asarray(special.normal_quantile(u))
        if self.family == Family.LOGNORMAL:
            return np.exp(first + second * z)
        return first + second * z

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        first, second = self.params
        if self.family == Family.GAMMA:
            return rng.gamma(first, second, size=size)
        if self.family == Family.LOGNORMAL:
            return rng.lognormal(first, second, size=size)
        return rng.normal(first, second, size=size)


def _lognormal_cdf(mu, sigma, x, upper: bool) -> np.ndarray:
    positive = x > 0
    z = (np.log(np.where(positive, x, 1.0)) - mu) / sigma
    tail = np.asarray(special.normal_cdf(-z if upper else z))
    return np.where(positive, tail, 1.0 if upper else 0.0)


def _check_moments(mean, variance, positive_mean: bool = True):
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(np.isnan(mean)) or np.any(np.isnan(variance)):
        raise InputError("Moments must not be NaN")
    if positive_mean and np.any(mean <= 0):
        raise InputError("Moment matching needs a positive mean")
    if np.any(variance < 0):
        raise InputError("Variance must be non-negative")
    if np.any(variance == 0):
        raise DegenerateDistributionError(
            "Cannot match a zero variance; use the constant-power path instead"
        )
    return mean, variance


def gamma_from_moments(mean, variance) -> FittedDistribution:
    """Shape mean^2/variance and scale variance/mean."""
    mean, variance = _check_moments(mean, variance)
    return FittedDistribution(
        family=Family.GAMMA,
        params=(mean**2 / variance, variance / mean),
        matched_mean=mean,
        matched_variance=variance,
    )


def lognormal_from_moments(mean, variance) -> FittedDistribution:
    """sigma^2 = ln(1 + variance/mean^2), mu = ln(mean) - sigma^2/2."""
    mean, variance = _check_moments(mean, variance)
    log_variance = np.log1p(variance / mean**2)
    return FittedDistribution(
        family=Family.LOGNORMAL,
        params=(np.log(mean) - 0.5 * log_variance, np.sqrt(log_variance)),
        matched_mean=mean,
        matched_variance=variance,
    )


def normal_from_moments(mean, variance) -> FittedDistribution:
    mean, variance = _check_moments(mean, variance, positive_mean=False)
    return FittedDistribution(
        family=Family.NORMAL,
        params=(mean, np.sqrt(variance)),
        matched_mean=mean,
        matched_variance=variance,
    )


_FITTERS = {
    Family.GAMMA: gamma_from_moments,
    Family.LOGNORMAL: lognormal_from_moments,
    Family.NORMAL: normal_from_moments,
}


def from_moments(family, mean, variance) -> FittedDistribution:
    return _FITTERS[Family(family)](mean, variance)


def cdf(dist: FittedDistribution, x):
    return dist.cdf(x)


def pdf(dist: FittedDistribution, x):
    return dist.pdf(x)


def sf(dist: FittedDistribution, x):
    return dist.sf(x)


def quantile(dist: FittedDistribution, u):
    return dist.quantile(u)


def sample(dist: FittedDistribution, rng: np.random.Generator, size: Optional[int] = None):
    return dist.sample(rng, size)
