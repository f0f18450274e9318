"""
Tests for the closed-form signal and interference moments, checked against
formulas and against Monte Carlo samples of a small network.
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from analysis.moments import (
    PowerKind,
    PowerStatistics,
    StatisticSource,
    interference_mean_case1,
    interference_mean_case2,
    interference_variance,
    interfering_gains,
    signal_moments_case1,
    signal_power_case2,
    user_statistics,
)
from errors import InputError, InvalidConfigurationError
from network.config import NetworkConfig
from network.geometry import sample_layout
from precoding.zero_forcing import NormalizationCase
from simulation.trials import simulate_drop

P = 31.6


def test_signal_moments_case1():
    stats = signal_moments_case1(P, 20, 10, 2e-9)
    assert stats.mean == pytest.approx(P * 11 * 2e-9 / 10)
    assert stats.variance == pytest.approx((P / 10) ** 2 * 4e-18 * 11)
    assert stats.kind == PowerKind.SIGNAL
    assert stats.source == StatisticSource.ANALYTIC


def test_signal_power_case2_is_deterministic():
    stats = signal_power_case2(P, 20, 10, np.array([1e-9, 3e-9]))
    assert np.allclose(stats.mean, P * 10 * np.array([1e-9, 3e-9]) / 10)
    assert np.array_equal(stats.variance, [0.0, 0.0])


def test_interference_formulas():
    gains = np.array([1e-10, 4e-11, 2e-12])
    assert interference_mean_case2(P, gains) == pytest.approx(P * gains.sum())
    assert interference_mean_case1(P, 20, 10, gains) == pytest.approx(P * 11 / 10 * gains.sum())
    assert interference_variance(P, 10, gains) == pytest.approx(P**2 * np.sum(gains**2) / 10)


def test_no_interfering_cells_means_no_interference():
    empty = np.zeros(0)
    assert interference_mean_case1(P, 4, 2, empty) == 0.0
    assert interference_mean_case2(P, empty) == 0.0
    assert interference_variance(P, 2, empty) == 0.0


def test_antenna_margin_is_required():
    with pytest.raises(InvalidConfigurationError):
        signal_moments_case1(P, 10, 10, 1e-9)
    with pytest.raises(InvalidConfigurationError):
        interference_mean_case1(P, 10, 10, [1e-9])


def test_power_statistics_invariants():
    with pytest.raises(InputError):
        PowerStatistics(
            mean=1.0, variance=0.5, kind=PowerKind.SIGNAL,
            case=NormalizationCase.AVERAGE, source=StatisticSource.ANALYTIC,
        )
    with pytest.raises(InputError):
        PowerStatistics(
            mean=1.0, variance=0.5, kind=PowerKind.INTERFERENCE,
            case=NormalizationCase.INSTANTANEOUS, source=StatisticSource.EMPIRICAL,
        )
    with pytest.raises(InputError):
        PowerStatistics(
            mean=-1.0, variance=0.5, kind=PowerKind.INTERFERENCE,
            case=NormalizationCase.INSTANTANEOUS, source=StatisticSource.ANALYTIC,
        )


def test_interfering_gains_drop_the_serving_station():
    config = NetworkConfig(num_cells=4, users_per_cell=3, antennas_per_bs=5)
    layout = sample_layout(config, 1)
    others = interfering_gains(layout.gains)
    assert others.shape == (4, 3, 3)
    assert np.allclose(others[2, 1], layout.gains[[0, 1, 3], 2, 1])
    single = sample_layout(NetworkConfig(num_cells=1, users_per_cell=2, antennas_per_bs=3), 1)
    assert interfering_gains(single.gains).shape == (1, 2, 0)


def test_user_statistics_shapes():
    config = NetworkConfig()
    layout = sample_layout(config, 2)
    for case in NormalizationCase:
        signal, interference = user_statistics(config, layout, case)
        assert signal.mean.shape == (9, 10)
        assert interference.variance.shape == (9, 10)
        assert interference.case == case


@pytest.fixture(scope="module")
def monte_carlo():
    config = NetworkConfig(num_cells=4, users_per_cell=2, antennas_per_bs=6)
    layout = sample_layout(config, 17)
    return config, layout, simulate_drop(layout, master_seed=99, drop=0, fadings=3000)


def test_case1_signal_matches_monte_carlo(monte_carlo):
    config, layout, samples = monte_carlo
    assert samples.aborted == 0
    signal, _ = user_statistics(config, layout, NormalizationCase.INSTANTANEOUS)
    s = samples.signal[NormalizationCase.INSTANTANEOUS]
    assert np.allclose(s.mean(axis=0) / signal.mean, 1.0, atol=0.05)
    assert np.allclose(s.var(axis=0, ddof=1) / signal.variance, 1.0, atol=0.15)


def test_case2_signal_is_constant(monte_carlo):
    config, layout, samples = monte_carlo
    signal, _ = user_statistics(config, layout, NormalizationCase.AVERAGE)
    s = samples.signal[NormalizationCase.AVERAGE]
    assert np.allclose(s, signal.mean[None], rtol=1e-6, atol=0.0)


def test_case2_interference_mean_matches_monte_carlo(monte_carlo):
    config, layout, samples = monte_carlo
    _, interference = user_statistics(config, layout, NormalizationCase.AVERAGE)
    i = samples.interference[NormalizationCase.AVERAGE]
    assert np.allclose(i.mean(axis=0) / interference.mean, 1.0, atol=0.1)


def test_case1_interference_mean_is_the_per_beam_power(monte_carlo):
    # Every beam carries exactly 1/K of the power, so the simulated mean sits at
    # p * sum(l); the case-1 closed form is larger by (M-K+1)/(M-K)
    config, layout, samples = monte_carlo
    M, K = config.antennas_per_bs, config.users_per_cell
    _, closed_form = user_statistics(config, layout, NormalizationCase.INSTANTANEOUS)
    others = interfering_gains(layout.gains)
    per_beam = interference_mean_case2(config.tx_power, others)
    assert np.allclose(closed_form.mean / per_beam, (M - K + 1) / (M - K))

    empirical = samples.interference[NormalizationCase.INSTANTANEOUS].mean(axis=0)
    assert np.allclose(empirical / per_beam, 1.0, atol=0.08)
    assert np.all(np.abs(empirical - per_beam) < np.abs(empirical - closed_form.mean))


def test_case1_interference_variance_is_not_underestimated(monte_carlo):
    config, layout, samples = monte_carlo
    _, closed_form = user_statistics(config, layout, NormalizationCase.INSTANTANEOUS)
    empirical = samples.interference[NormalizationCase.INSTANTANEOUS].var(axis=0, ddof=1)
    assert np.all(empirical / closed_form.variance >= 0.9)


@pytest.mark.parametrize("K", [1, 4, 10])
def test_case1_signal_mean_exceeds_case2_by_the_jensen_factor(K):
    gains = np.array([3e-9, 7e-11, 1.5e-13])
    for M in range(K + 1, K + 190):
        case1 = signal_moments_case1(P, M, K, gains).mean
        case2 = signal_power_case2(P, M, K, gains).mean
        factor = (M - K + 1) / (M - K)
        assert np.all(case1 > case2)
        assert np.allclose(case1 / case2, factor, rtol=1e-12, atol=0.0)


def test_case1_interference_mean_exceeds_case2_by_the_same_factor():
    rng = np.random.default_rng(13)
    gains = 10.0 ** rng.uniform(-14, -9, size=(6, 8))
    for M, K in [(11, 10), (12, 10), (20, 10), (6, 2), (100, 10)]:
        ratio = interference_mean_case1(P, M, K, gains) / interference_mean_case2(P, gains)
        assert ratio.shape == (6,)
        assert np.allclose(ratio, (M - K + 1) / (M - K), rtol=1e-12, atol=0.0)


def test_moments_scale_with_transmit_power():
    M, K = 20, 10
    serving = np.array([2e-9, 5e-12])
    others = np.array([[1e-10, 4e-11, 2e-12], [3e-13, 8e-12, 1e-11]])
    for p in (0.5, 31.6):
        assert np.allclose(signal_moments_case1(2 * p, M, K, serving).mean, 2 * signal_moments_case1(p, M, K, serving).mean)
        assert np.allclose(
            signal_moments_case1(2 * p, M, K, serving).variance, 4 * signal_moments_case1(p, M, K, serving).variance
        )
        assert np.allclose(signal_power_case2(2 * p, M, K, serving).mean, 2 * signal_power_case2(p, M, K, serving).mean)
        assert np.allclose(interference_mean_case1(2 * p, M, K, others), 2 * interference_mean_case1(p, M, K, others))
        assert np.allclose(interference_mean_case2(2 * p, others), 2 * interference_mean_case2(p, others))
        assert np.allclose(interference_variance(2 * p, K, others), 4 * interference_variance(p, K, others))
