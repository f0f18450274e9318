"""
Tests for the Monte Carlo campaign and the figure presets.
"""
import os
import sys

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from analysis.distributions import Family
from errors import CampaignError, SingularChannelError
from network.config import NetworkConfig, RunSettings
from precoding.zero_forcing import NormalizationCase
from simulation import trials
from simulation.campaign import CampaignResult, CampaignSpec, run_campaign
from simulation.presets import PRESETS, check_fig1, preset_spec
from storage.results import write_csv

SMALL = NetworkConfig(num_cells=4, users_per_cell=2, antennas_per_bs=3)


def _spec(**overrides) -> CampaignSpec:
    values = {
        "config": SMALL,
        "num_drops": 3,
        "fadings_per_drop": 16,
        "antenna_sweep": (3, 5),
        "master_seed": 123,
        "rate_grid": (0.5, 1.0, 2.0, 4.0),
        "workers": 1,
    }
    values.update(overrides)
    return CampaignSpec(**values)


def test_single_cell_single_user_campaign():
    config = NetworkConfig(num_cells=1, users_per_cell=1, antennas_per_bs=2)
    spec = CampaignSpec(
        config=config, num_drops=2, fadings_per_drop=20, antenna_sweep=(2, 3),
        master_seed=1, workers=1,
    )
    result = run_campaign(spec)

    assert result.metadata["attempted_trials"] == 2 * 20 * 2
    assert result.metadata["aborted_trials"] == 0
    assert list(result.moments.columns) == ["M", "case", "user", "stat", "analytic", "empirical", "rel_error"]
    assert len(result.moments) == 2 * 2 * 4
    # no interference and no KS test without interfering cells
    interference = result.moments[result.moments["stat"] == "mean_I"]
    assert np.all(interference["analytic"] == 0.0)
    assert interference["rel_error"].isna().all()
    assert result.kstest.empty
    assert set(result.rmse["family"]) == {"gamma", "lognormal"}
    assert result.rate_grid.size == 40


def test_results_do_not_depend_on_worker_count(tmp_path):
    serial = run_campaign(_spec(workers=1))
    parallel = run_campaign(_spec(workers=3))
    for name in ("moments", "kstest", "outage", "rmse"):
        pd.testing.assert_frame_equal(getattr(serial, name), getattr(parallel, name))
        first = write_csv(getattr(serial, name), str(tmp_path / f"{name}_1.csv"))
        second = write_csv(getattr(parallel, name), str(tmp_path / f"{name}_3.csv"))
        with open(first, "rb") as a, open(second, "rb") as b:
            assert a.read() == b.read()


def test_seed_changes_the_samples():
    first = run_campaign(_spec(outputs=frozenset({"moments"})))
    second = run_campaign(_spec(outputs=frozenset({"moments"}), master_seed=124))
    assert not np.array_equal(first.moments["empirical"].to_numpy(), second.moments["empirical"].to_numpy())


def test_campaign_tables():
    result = run_campaign(_spec())
    assert set(result.kstest["family"]) == {"gamma", "lognormal", "normal"}
    assert result.kstest["acceptance_rate"].between(0, 1).all()
    assert list(result.outage.columns) == ["M", "case", "family", "R0", "analytic", "empirical"]
    assert len(result.outage) == 2 * 2 * 2 * 4
    assert result.outage[["analytic", "empirical"]].stack().between(0, 1).all()
    assert len(result.rmse) == 2 * 2 * 2
    summary = result.moment_summary()
    assert set(summary["stat"]) == {"mean_S", "var_S", "mean_I", "var_I"}


def test_moments_agree_with_closed_forms():
    spec = _spec(
        config=SMALL.with_antennas(6), antenna_sweep=(6,), num_drops=2, fadings_per_drop=400,
        outputs=frozenset({"moments"}),
    )
    result = run_campaign(spec)
    frame = result.moments
    case2_signal = frame[(frame["case"] == 2) & (frame["stat"] == "mean_S")]
    assert np.allclose(case2_signal["rel_error"], 0.0, atol=1e-6)
    assert frame[(frame["case"] == 2) & (frame["stat"] == "var_S")]["rel_error"].isna().all()
    case1_signal = frame[(frame["case"] == 1) & (frame["stat"] == "mean_S")]
    assert case1_signal["rel_error"].abs().max() < 0.1


def test_dump_samples_keeps_user_zero_of_drop_zero():
    result = run_campaign(_spec(dump_samples=True, outputs=frozenset({"moments"})))
    assert set(result.samples) == {3, 5}
    assert result.samples[3].shape == (16,)


def test_too_many_aborted_trials(monkeypatch):
    def failing(layout, rng):
        raise SingularChannelError("forced")

    monkeypatch.setattr(trials, "simulate_fading", failing)
    with pytest.raises(CampaignError):
        run_campaign(_spec(outputs=frozenset({"moments"})))


@pytest.mark.parametrize(
    "overrides",
    [
        {"antenna_sweep": (2, 5)},
        {"families": (Family.NORMAL,)},
        {"rate_grid": (0.0, 1.0)},
        {"cases": ()},
        {"num_drops": 0},
        {"outputs": frozenset({"plots"})},
    ],
)
def test_invalid_specs_are_rejected(overrides):
    with pytest.raises(ValidationError):
        _spec(**overrides)


def test_preset_specs():
    settings = RunSettings(cells=4, users_per_cell=2, antennas=(4, 6))
    fig1 = preset_spec("fig1", settings, num_drops=2, fadings_per_drop=None)
    assert fig1.antenna_sweep == PRESETS["fig1"]["antenna_sweep"]
    assert fig1.outputs == frozenset({"kstest"})
    assert fig1.fadings_per_drop == CampaignSpec().fadings_per_drop
    fig3 = preset_spec("fig3", settings)
    assert fig3.antenna_sweep == (4, 6)
    assert fig3.cases == (NormalizationCase.AVERAGE,)
    with pytest.raises(KeyError):
        preset_spec("fig4", settings)


def _ks_result(rows) -> CampaignResult:
    empty = pd.DataFrame()
    return CampaignResult(
        moments=empty, kstest=pd.DataFrame(rows, columns=["M", "family", "acceptance_rate"]),
        outage=empty, rmse=empty, metadata={},
    )


def test_check_fig1():
    rows = [
        (20, "normal", 0.9), (20, "lognormal", 0.5),
        (60, "normal", 0.4), (60, "lognormal", 0.7),
        (100, "normal", 0.3), (100, "lognormal", 0.8),
    ]
    assert check_fig1(_ks_result(rows)) is True
    rows[-1] = (100, "lognormal", 0.1)
    assert check_fig1(_ks_result(rows)) is False
    assert check_fig1(_ks_result(rows[:2])) is None


@pytest.fixture(scope="module")
def reference_network():
    """Nine cells of ten users at M in {12, 20, 40}, 12 drops x 200 fadings."""
    spec = CampaignSpec(
        config=NetworkConfig(),
        num_drops=12,
        fadings_per_drop=200,
        antenna_sweep=(12, 20, 40),
        master_seed=20180101,
        outputs=frozenset({"moments", "outage"}),
        families=(Family.GAMMA,),
        workers=4,
    )
    return run_campaign(spec)


def _summary(result: CampaignResult, case: int, stat: str) -> pd.Series:
    summary = result.moment_summary()
    rows = summary[(summary["case"] == case) & (summary["stat"] == stat)]
    return rows.set_index("M")["rel_error"]


def test_reference_network_signal_means(reference_network):
    for case in (1, 2):
        errors = _summary(reference_network, case, "mean_S")
        assert list(errors.index) == [12, 20, 40]
        assert errors.abs().max() < 0.02


def test_reference_network_average_case_interference_mean(reference_network):
    assert _summary(reference_network, 2, "mean_I").abs().max() < 0.02


def test_reference_network_instantaneous_interference_gap(reference_network):
    # simulation sits at p * sum(l), below the case-1 closed form by (M-K+1)/(M-K)
    errors = _summary(reference_network, 1, "mean_I")
    for M, error in errors.items():
        assert error == pytest.approx(-1.0 / (M - 10 + 1), abs=0.02)


def test_reference_network_outage_rmse(reference_network):
    rmse = reference_network.rmse.set_index(["case", "M"])["rmse"]
    for M in (12, 20, 40):
        assert rmse[(2, M)] <= 0.035
    for M in (20, 40):
        assert rmse[(1, M)] <= 0.03
