"""
Tests for the outage probability: closed forms, the quadrature for random
signal power, empirical outage and the independent reference computations.
"""
import os
import sys

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from analysis.distributions import Family, gamma_from_moments, lognormal_from_moments
from analysis.goodness_of_fit import ks_test
from analysis.moments import user_statistics
from analysis.outage import (
    OutageQuery,
    analytic_outage,
    default_rate_grid,
    empirical_outage,
    outage_case1,
    outage_case2,
    outage_curve,
    parse_rate_grid,
)
from errors import InputError, InvalidConfigurationError
from network.config import NetworkConfig
from network.geometry import sample_layout
from precoding.zero_forcing import NormalizationCase
from simulation.oracles import brute_force_outage, grid_outage, inverse_wishart_diagonal, inverse_wishart_trace
from simulation.trials import simulate_drop

NOISE = 0.2
SIGNAL = gamma_from_moments(6.0, 6.0)
INTERFERENCE = gamma_from_moments(1.5, 0.5)


def test_case2_is_an_interference_tail():
    rate = 0.7
    t = 4.0 / np.expm1(rate) - NOISE
    expected = stats.gamma(4.5, scale=1 / 3).sf(t)
    assert outage_case2(4.0, INTERFERENCE, NOISE, rate) == pytest.approx(expected, rel=1e-9)


def test_case2_certain_outage_when_noise_alone_blocks_the_rate():
    rate = np.log1p(4.0 / NOISE) + 0.1
    assert outage_case2(4.0, INTERFERENCE, NOISE, rate) == 1.0
    assert outage_case2(4.0, None, NOISE, [0.5, rate]).tolist() == [0.0, 1.0]


def test_case1_without_interference_is_the_signal_cdf():
    rate = 1.2
    expected = SIGNAL.cdf(np.expm1(rate) * NOISE)
    assert outage_case1(SIGNAL, None, NOISE, rate) == pytest.approx(float(expected))


def test_case1_matches_grid_integration():
    for rate in (0.3, 1.0, 1.6):
        quadrature = outage_case1(SIGNAL, INTERFERENCE, NOISE, rate)
        assert quadrature == pytest.approx(grid_outage(SIGNAL, INTERFERENCE, NOISE, rate), abs=1e-4)


def test_case1_matches_brute_force():
    rng = np.random.default_rng(21)
    interference = lognormal_from_moments(1.5, 0.5)
    rates = np.array([0.5, 1.0, 1.5])
    expected = brute_force_outage(SIGNAL, interference, NOISE, rates, 1_000_000, rng)
    assert np.allclose(outage_case1(SIGNAL, interference, NOISE, rates), expected, atol=3e-3)


def test_case1_quadrature_is_self_consistent():
    rate = 1.1
    coarse, abserr = outage_case1(SIGNAL, INTERFERENCE, NOISE, rate, quad_tol=1e-8, full_output=True)
    fine = outage_case1(SIGNAL, INTERFERENCE, NOISE, rate, quad_tol=1e-10)
    assert abserr <= 1e-8
    assert abs(coarse - fine) <= 1e-7


def test_outage_is_monotone_in_rate():
    rates = np.linspace(0.05, 3.0, 40)
    case1 = outage_case1(SIGNAL, INTERFERENCE, NOISE, rates)
    case2 = outage_case2(6.0, INTERFERENCE, NOISE, rates)
    assert np.all(np.diff(case1) >= -1e-12)
    assert np.all(np.diff(case2) >= 0)
    assert np.all((case1 >= 0) & (case1 <= 1))


def test_vectorized_users_and_rates():
    signal = gamma_from_moments(np.array([6.0, 3.0]), np.array([6.0, 1.0])).with_trailing_axis()
    interference = gamma_from_moments(np.array([1.5, 0.5]), np.array([0.5, 0.1])).with_trailing_axis()
    rates = np.array([0.4, 0.9, 1.4])
    values = outage_case1(signal, interference, NOISE, rates)
    assert values.shape == (2, 3)
    single = outage_case1(
        gamma_from_moments(3.0, 1.0), gamma_from_moments(0.5, 0.1), NOISE, rates
    )
    assert np.allclose(values[1], single, atol=1e-7)


def test_query_evaluates_either_case():
    assert OutageQuery(1.0, NOISE, SIGNAL, INTERFERENCE).evaluate() == pytest.approx(
        outage_case1(SIGNAL, INTERFERENCE, NOISE, 1.0)
    )
    assert OutageQuery(1.0, NOISE, 4.0, INTERFERENCE).evaluate() == pytest.approx(
        outage_case2(4.0, INTERFERENCE, NOISE, 1.0)
    )
    with pytest.raises(InputError):
        OutageQuery(0.0, NOISE, SIGNAL, INTERFERENCE)
    with pytest.raises(InputError):
        OutageQuery(1.0, 0.0, SIGNAL, INTERFERENCE)


def test_empirical_outage_counts_rates_at_the_target():
    signal = np.array([0.5, 2.0, 8.0])
    interference = np.zeros(3)
    assert empirical_outage(signal, interference, 1.0, np.log1p(0.5)) == pytest.approx(1 / 3)


def test_empirical_outage_keeps_user_axes():
    rng = np.random.default_rng(2)
    signal = rng.exponential(size=(3, 4, 50))
    interference = rng.exponential(size=(3, 4, 50))
    values = empirical_outage(signal, interference, NOISE, np.linspace(0.1, 2.0, 5))
    assert values.shape == (3, 4, 5)
    with pytest.raises(InputError):
        empirical_outage(signal, interference[..., :10], NOISE, 1.0)


def test_parse_rate_grid():
    assert np.allclose(parse_rate_grid("0.5:2:4"), [0.5, 1.0, 1.5, 2.0])
    assert np.allclose(parse_rate_grid("1:2:2", units="bits"), np.log(2.0) * np.array([1.0, 2.0]))
    with pytest.raises(InvalidConfigurationError):
        parse_rate_grid("1:2")
    with pytest.raises(InvalidConfigurationError):
        parse_rate_grid("1:2:3", units="dB")
    with pytest.raises(InputError):
        parse_rate_grid("0:1:3")


@pytest.fixture(scope="module")
def small_network():
    config = NetworkConfig(num_cells=4, users_per_cell=2, antennas_per_bs=6)
    return config, sample_layout(config, 8)


def test_analytic_outage_shape(small_network):
    config, layout = small_network
    rates = np.array([0.5, 2.0, 5.0])
    for case in NormalizationCase:
        signal, interference = user_statistics(config, layout, case)
        for family in (Family.GAMMA, Family.LOGNORMAL):
            values = analytic_outage(signal, interference, config.noise_power, rates, family)
            assert values.shape == (4, 2, 3)
            assert np.all(np.diff(values, axis=-1) >= -1e-12)


def test_outage_curve_tracks_monte_carlo_in_case2(small_network):
    config, layout = small_network
    samples = simulate_drop(layout, master_seed=5, drop=0, fadings=400)
    rates = default_rate_grid([layout], points=12)
    s, i = samples.user_major(NormalizationCase.AVERAGE)
    curve = outage_curve(layout, NormalizationCase.AVERAGE, Family.GAMMA, rates, s, i)
    assert curve.analytic.shape == (8, 12)
    assert curve.empirical.shape == (8, 12)
    assert curve.rmse < 0.15


def test_default_rate_grid_spans_the_outage_range(small_network):
    config, layout = small_network
    grid = default_rate_grid([layout])
    assert grid.size == 40
    assert np.all(grid > 0) and np.all(np.diff(grid) > 0)
    reference = config.with_antennas(20)
    signal, interference = user_statistics(reference, layout, NormalizationCase.INSTANTANEOUS)
    curve = analytic_outage(
        signal, interference, reference.noise_power, grid[[0, -1]], Family.GAMMA
    ).reshape(-1, 2).mean(axis=0)
    assert curve[0] == pytest.approx(0.01, abs=0.01)
    assert curve[1] == pytest.approx(0.99, abs=0.01)


def test_inverse_wishart_oracles():
    rng = np.random.default_rng(31)
    M, K = 7, 3
    diagonal = inverse_wishart_diagonal(rng, M, K, 20000)
    assert diagonal.mean() == pytest.approx(M - K + 1, rel=0.02)
    assert diagonal.var() == pytest.approx(M - K + 1, rel=0.05)
    trace = inverse_wishart_trace(rng, M, K, 20000)
    assert trace.mean() == pytest.approx(K / (M - K), rel=0.03)


def test_inverse_wishart_diagonal_is_gamma_distributed():
    rng = np.random.default_rng(32)
    M, K = 12, 10
    repetitions, n = 200, 2000
    samples = inverse_wishart_diagonal(rng, M, K, repetitions * n).reshape(repetitions, n)
    reference = gamma_from_moments(M - K + 1, M - K + 1)
    accepted = [not ks_test(row, reference).reject_at_5pct for row in samples]
    assert np.mean(accepted) >= 0.9


@pytest.mark.parametrize("M, K", [(12, 10), (20, 10), (6, 2)])
def test_inverse_wishart_trace_mean(M, K):
    trace = inverse_wishart_trace(np.random.default_rng(M * 100 + K), M, K, 100_000)
    assert trace.mean() == pytest.approx(K / (M - K), rel=0.02)
