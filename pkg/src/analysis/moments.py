"""
Closed-form means and variances of the per-user signal power S and inter-cell
interference power I under zero forcing, for both normalization cases.

Interference formulas take one aggregate gain per interfering cell: the sum
over that cell's own users collapses because each of its K beams carries 1/K
of the power on average.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from errors import InputError, InvalidConfigurationError
from network.config import NetworkConfig
from network.geometry import NetworkLayout
from precoding.zero_forcing import NormalizationCase


class PowerKind(str, Enum):
    SIGNAL = "signal"
    INTERFERENCE = "interference"


class StatisticSource(str, Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class PowerStatistics:
    """Mean (watts) and variance (watts^2); arrays hold one entry per user."""

    mean: np.ndarray
    variance: np.ndarray
    kind: PowerKind
    case: NormalizationCase
    source: StatisticSource
    sample_count: Optional[int] = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        variance = np.asarray(self.variance, dtype=float)
        if np.any(mean < 0) or np.any(variance < 0):
            raise InputError("Power statistics must be non-negative")
        if (
            self.source == StatisticSource.ANALYTIC
            and self.kind == PowerKind.SIGNAL
            and self.case == NormalizationCase.AVERAGE
            and np.any(variance != 0)
        ):
            raise InputError("Average-normalized signal power has zero variance")
        if self.source == StatisticSource.EMPIRICAL and self.sample_count is None:
            raise InputError("Empirical statistics must carry their sample count")


def _require_antenna_margin(M: int, K: int):
    if M <= K:
        raise InvalidConfigurationError(f"Closed-form moments need M > K, got M={M}, K={K}")


def signal_moments_case1(p: float, M: int, K: int, serving_gain) -> PowerStatistics:
    """
    S = p mu^2 with mu^2 = l X / K and X ~ Gamma(M - K + 1, 1), hence
    E{S} = p (M-K+1) l / K and Var{S} = (p/K)^2 l^2 (M-K+1).
    """
    _require_antenna_margin(M, K)
    gain = np.asarray(serving_gain, dtype=float)
    dof = M - K + 1
    return PowerStatistics(
        mean=p * dof * gain / K,
        variance=(p / K) ** 2 * gain**2 * dof,
        kind=PowerKind.SIGNAL,
        case=NormalizationCase.INSTANTANEOUS,
        source=StatisticSource.ANALYTIC,
    )


def signal_power_case2(p: float, M: int, K: int, serving_gain) -> PowerStatistics:
    """Deterministic S = p (M-K) l / K."""
    _require_antenna_margin(M, K)
    gain = np.asarray(serving_gain, dtype=float)
    mean = p * (M - K) * gain / K
    return PowerStatistics(
        mean=mean,
        variance=np.zeros_like(mean),
        kind=PowerKind.SIGNAL,
        case=NormalizationCase.AVERAGE,
        source=StatisticSource.ANALYTIC,
    )


def _gain_sum(interfering_gains, power: int = 1):
    gains = np.asarray(interfering_gains, dtype=float)
    if gains.size == 0:
        return np.zeros(gains.shape[:-1]) if gains.ndim > 1 else 0.0
    total = np.sum(gains**power, axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def interference_mean_case1(p: float, M: int, K: int, interfering_gains):
    """p (M-K+1)/(M-K) sum_q' l_q'; the last axis runs over interfering cells."""
    _require_antenna_margin(M, K)
    return p * (M - K + 1) / (M - K) * _gain_sum(interfering_gains)


def interference_mean_case2(p: float, interfering_gains):
    """p sum_q' l_q', independent of M and K."""
    return p * _gain_sum(interfering_gains)


def interference_variance(p: float, K: int, interfering_gains):
    """(1/K) sum_q' (p l_q')^2, shared by both normalization cases."""
    if K < 1:
        raise InvalidConfigurationError("K must be at least 1")
    return p**2 * _gain_sum(interfering_gains, power=2) / K


def interfering_gains(gains: np.ndarray) -> np.ndarray:
    """
    From l[b, q, k], the gains toward user (q, k) from every base station except its own.

    Returns shape (Q, K, Q-1); the last axis is empty for a single cell.
    """
    gains = np.asarray(gains, dtype=float)
    num_cells = gains.shape[0]
    per_user = np.moveaxis(gains, 0, -1)  # (q, k, b)
    return np.stack([np.delete(per_user[q], q, axis=-1) for q in range(num_cells)])


def user_statistics(
    config: NetworkConfig,
    layout: NetworkLayout,
    case: NormalizationCase,
) -> tuple[PowerStatistics, PowerStatistics]:
    """Analytic (signal, interference) statistics of every user of a layout, arrays of shape (Q, K)."""
    p = config.tx_power
    M, K = config.antennas_per_bs, config.users_per_cell
    gains = layout.gains
    serving = layout.serving_gains
    others = interfering_gains(gains)

    if case == NormalizationCase.INSTANTANEOUS:
        signal = signal_moments_case1(p, M, K, serving)
        interference_mean = interference_mean_case1(p, M, K, others)
    else:
        signal = signal_power_case2(p, M, K, serving)
        interference_mean = interference_mean_case2(p, others)

    interference = PowerStatistics(
        mean=np.broadcast_to(interference_mean, serving.shape).copy(),
        variance=np.broadcast_to(interference_variance(p, K, others), serving.shape).copy(),
        kind=PowerKind.INTERFERENCE,
        case=NormalizationCase(case),
        source=StatisticSource.ANALYTIC,
    )
    return signal, interference
