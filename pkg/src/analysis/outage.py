"""
Outage probability P{ln(1 + S/(I + noise)) <= R0} with rates in nats/s/Hz.

Case 1 (instantaneous normalization) integrates F_S((e^R0 - 1)(i + noise)) f_I(i)
over the interference support; case 2 has a constant signal power and reduces
to a tail probability of the interference.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad_vec

from analysis.distributions import Family, FittedDistribution, from_moments, gamma_from_moments
from analysis.moments import PowerStatistics, user_statistics
from errors import InputError, InvalidConfigurationError, QuadratureError
from logger import get_logger, log_event
from network.geometry import NetworkLayout
from precoding.zero_forcing import NormalizationCase, nats_from_bits, spectral_efficiency
from settings import OUTAGE_SPAN, QUAD_TOL, RATE_GRID_POINTS
from simulation.statistics import rmse

logger = get_logger(__name__)

# The integration range stops at this interference quantile
TRUNCATION_LEVEL = 1.0 - 1e-9


def _as_output(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _check_rates(target_rate) -> np.ndarray:
    rates = np.asarray(target_rate, dtype=float)
    if np.any(np.isnan(rates)) or np.any(rates <= 0):
        raise InputError("Target rates must be positive")
    return rates


def _check_noise(noise_power: float):
    if not noise_power > 0:
        raise InputError("Noise power must be positive")


@dataclass(frozen=True)
class OutageQuery:
    """A single outage evaluation; signal is a fitted distribution (case 1) or a constant power (case 2)."""

    target_rate: Union[float, np.ndarray]
    noise_power: float
    signal: Union[FittedDistribution, float, np.ndarray]
    interference: Optional[FittedDistribution] = None

    def __post_init__(self):
        _check_rates(self.target_rate)
        _check_noise(self.noise_power)

    def evaluate(self, quad_tol: float = QUAD_TOL):
        if isinstance(self.signal, FittedDistribution):
            return outage_case1(self.signal, self.interference, self.noise_power, self.target_rate, quad_tol)
        return outage_case2(self.signal, self.interference, self.noise_power, self.target_rate)


def outage_case1(
    signal: FittedDistribution,
    interference: Optional[FittedDistribution],
    noise_power: float,
    target_rate,
    quad_tol: float = QUAD_TOL,
    full_output: bool = False,
):
    """
    Outage with a random (gamma) signal power.

    The integral runs over [0, i_max], i_max the 1 - 1e-9 interference quantile,
    mapped onto u in [0, 1] and integrated by adaptive Gauss-Kronrod. The
    truncated tail contributes between sf_I(i_max) F_S(threshold(i_max)) and
    sf_I(i_max); the lower bound is added. Distribution parameters broadcast
    against target_rate, so params of shape (U, 1) and rates of shape (R,) give
    a (U, R) result in one call.

    Args:
        interference: None for an interference-free network
        full_output: also return the quadrature's absolute error estimate

    Raises:
        QuadratureError: adaptive refinement did not reach quad_tol
    """
    rates = _check_rates(target_rate)
    _check_noise(noise_power)
    threshold = np.expm1(rates)

    if interference is None:
        result = np.clip(signal.cdf(threshold * noise_power), 0.0, 1.0)
        return (_as_output(result), 0.0) if full_output else _as_output(result)

    i_max = np.asarray(interference.quantile(TRUNCATION_LEVEL))

    def integrand(u):
        i = u * i_max
        return signal.cdf(threshold * (i + noise_power)) * interference.pdf(i) * i_max

    estimate, abserr, info = quad_vec(
        integrand, 0.0, 1.0, epsabs=quad_tol, epsrel=0.0, norm="max", full_output=True
    )
    if info.status != 0:
        raise QuadratureError("Outage quadrature did not converge", estimate, abserr)
    log_event(
        logger, "outage", "Quadrature used %d evaluations, abserr %.2e", info.neval, abserr, level="debug"
    )

    tail = interference.sf(i_max) * signal.cdf(threshold * (i_max + noise_power))
    result = np.clip(estimate + tail, 0.0, 1.0)
    return (_as_output(result), float(abserr)) if full_output else _as_output(result)


def outage_case2(signal_power, interference: Optional[FittedDistribution], noise_power: float, target_rate):
    """
    1 - F_I(t) with t = S / (e^R0 - 1) - noise; certain outage when t <= 0.

    Raises:
        InputError: non-positive signal power, rate or noise
    """
    rates = _check_rates(target_rate)
    _check_noise(noise_power)
    signal_power = np.asarray(signal_power, dtype=float)
    if np.any(signal_power <= 0):
        raise InputError("Signal power must be positive")

    with np.errstate(divide="ignore"):
        t = signal_power / np.expm1(rates) - noise_power
    if interference is None:
        result = np.where(t <= 0, 1.0, 0.0)
    else:
        result = np.where(t <= 0, 1.0, interference.sf(np.maximum(t, 0.0)))
    return _as_output(np.clip(result, 0.0, 1.0))


def empirical_outage(signal_samples, interference_samples, noise_power: float, target_rate):
    """
    Fraction of paired realizations whose rate ln(1 + S/(I + noise)) is <= R0.

    Samples are paired along the last axis; leading axes (users) are kept and
    the rate grid is appended as the new last axis.

    Raises:
        InputError: unequal or empty sample arrays
    """
    signal = np.asarray(signal_samples, dtype=float)
    interference = np.asarray(interference_samples, dtype=float)
    if signal.shape != interference.shape:
        raise InputError(f"Sample shapes differ: {signal.shape} vs {interference.shape}")
    if signal.ndim == 0 or signal.shape[-1] < 1:
        raise InputError("At least one paired sample is needed")

    rates = np.sort(spectral_efficiency(signal, interference, noise_power), axis=-1)
    grid = np.asarray(target_rate, dtype=float)
    n = rates.shape[-1]
    flat = rates.reshape(-1, n)
    counts = np.stack([np.searchsorted(row, np.ravel(grid), side="right") for row in flat])
    fractions = counts.reshape(rates.shape[:-1] + grid.shape) / n
    return _as_output(fractions)


def fitted_signal(statistics: PowerStatistics):
    """Gamma fit for case 1; the constant power itself for case 2."""
    if statistics.case == NormalizationCase.AVERAGE:
        return np.asarray(statistics.mean, dtype=float)
    return gamma_from_moments(statistics.mean, statistics.variance)


def fitted_interference(statistics: PowerStatistics, family: Family = Family.GAMMA) -> Optional[FittedDistribution]:
    """Moment-matched interference; None when no user sees any interference (single cell)."""
    if np.all(np.asarray(statistics.mean) == 0):
        return None
    return from_moments(family, statistics.mean, statistics.variance)


def analytic_outage(
    signal: PowerStatistics,
    interference: PowerStatistics,
    noise_power: float,
    target_rate,
    family: Family = Family.GAMMA,
    quad_tol: float = QUAD_TOL,
) -> np.ndarray:
    """Per-user outage on a rate grid, shape (*user_shape, R), from analytic or empirical moments."""
    rates = np.ravel(_check_rates(target_rate))
    user_shape = np.shape(signal.mean)
    fitted_i = fitted_interference(interference, family)
    if fitted_i is not None:
        fitted_i = fitted_i.ravel().with_trailing_axis()

    if signal.case == NormalizationCase.INSTANTANEOUS:
        fitted_s = fitted_signal(signal).ravel().with_trailing_axis()
        values = outage_case1(fitted_s, fitted_i, noise_power, rates, quad_tol)
    else:
        constant = np.ravel(fitted_signal(signal))[:, None]
        values = outage_case2(constant, fitted_i, noise_power, rates)
    values = np.broadcast_to(values, (int(np.prod(user_shape, dtype=int)), rates.size))
    return values.reshape(*user_shape, rates.size)


@dataclass(frozen=True)
class OutageCurve:
    rates: np.ndarray      # (R,) nats/s/Hz
    analytic: np.ndarray   # (users, R)
    empirical: np.ndarray  # (users, R)
    case: NormalizationCase
    family: Family

    @property
    def analytic_average(self) -> np.ndarray:
        return self.analytic.mean(axis=0)

    @property
    def empirical_average(self) -> np.ndarray:
        return self.empirical.mean(axis=0)

    @property
    def rmse(self) -> float:
        """RMSE between the cell-average curves."""
        return rmse(self.analytic_average, self.empirical_average)

    @property
    def user_rmse(self) -> np.ndarray:
        return np.sqrt(np.mean((self.analytic - self.empirical) ** 2, axis=-1))


def outage_curve(
    layout: NetworkLayout,
    case: NormalizationCase,
    family: Family,
    rates,
    signal_samples,
    interference_samples,
    quad_tol: float = QUAD_TOL,
) -> OutageCurve:
    """
    Analytic per-user outage of one layout next to the empirical outage of its
    Monte Carlo samples (arrays of shape (Q, K, n)).
    """
    rates = np.ravel(_check_rates(rates))
    config = layout.config
    signal, interference = user_statistics(config, layout, case)
    analytic = analytic_outage(signal, interference, config.noise_power, rates, family, quad_tol)
    empirical = empirical_outage(signal_samples, interference_samples, config.noise_power, rates)
    users = config.num_cells * config.users_per_cell
    return OutageCurve(
        rates=rates,
        analytic=analytic.reshape(users, rates.size),
        empirical=np.asarray(empirical).reshape(users, rates.size),
        case=NormalizationCase(case),
        family=Family(family),
    )


def _crossing(log_rates: np.ndarray, curve: np.ndarray, level: float) -> float:
    """log-rate where a nondecreasing curve first reaches level, linearly interpolated."""
    above = np.nonzero(curve >= level)[0]
    if above.size == 0:
        return float(log_rates[-1])
    j = int(above[0])
    if j == 0:
        return float(log_rates[0])
    c0, c1 = curve[j - 1], curve[j]
    weight = (level - c0) / (c1 - c0) if c1 > c0 else 1.0
    return float(log_rates[j - 1] + weight * (log_rates[j] - log_rates[j - 1]))


def default_rate_grid(
    layouts: Sequence[NetworkLayout],
    points: int = RATE_GRID_POINTS,
    span: tuple[float, float] = OUTAGE_SPAN,
    search_range: tuple[float, float] = (1e-3, 60.0),
    search_points: int = 120,
    quad_tol: float = QUAD_TOL,
) -> np.ndarray:
    """
    Log-spaced rates whose cell-average analytic outage (case 1, gamma
    interference, M = max(20, K + 1)) runs from span[0] to span[1].
    """
    if not layouts:
        raise InvalidConfigurationError("default_rate_grid needs at least one layout")
    log_search = np.linspace(np.log(search_range[0]), np.log(search_range[1]), search_points)
    search = np.exp(log_search)

    curves = []
    for layout in layouts:
        config = layout.config
        reference = config.with_antennas(max(20, config.users_per_cell + 1))
        signal, interference = user_statistics(reference, layout, NormalizationCase.INSTANTANEOUS)
        values = analytic_outage(signal, interference, reference.noise_power, search, Family.GAMMA, quad_tol)
        curves.append(values.reshape(-1, search.size))
    average = np.maximum.accumulate(np.concatenate(curves).mean(axis=0))

    if average[0] > span[0] or average[-1] < span[1]:
        log_event(
            logger, "outage",
            "Search range covers outage %.3g..%.3g only; rate grid is clipped to it",
            average[0], average[-1], level="warning",
        )
    low = _crossing(log_search, average, span[0])
    high = _crossing(log_search, average, span[1])
    if high <= low:
        high = low + np.log(10.0)
    return np.exp(np.linspace(low, high, points))


def parse_rate_grid(text: str, units: str = "nats") -> np.ndarray:
    """
    'start:stop:steps' into a linear grid in nats.

    Raises:
        InvalidConfigurationError: malformed text or unknown units
        InputError: non-positive rates
    """
    parts = text.split(":")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError) as exc:
        raise InvalidConfigurationError(f"Rate grid '{text}' is not of the form start:stop:steps") from exc
    if len(parts) != 3 or steps < 1:
        raise InvalidConfigurationError(f"Rate grid '{text}' is not of the form start:stop:steps")
    grid = np.linspace(start, stop, steps)
    if units == "bits":
        grid = nats_from_bits(grid)
    elif units != "nats":
        raise InvalidConfigurationError(f"Unknown rate units '{units}'")
    return _check_rates(grid)
