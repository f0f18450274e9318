"""
Monte Carlo campaign: nested drops x fading realizations for every antenna
count of a sweep, compared against the closed-form moments, KS fits and
analytic outage curves.

Work is split into (M, drop) cells run on a thread pool; results are merged
in index order, so the output does not depend on the number of workers.
"""
import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from analysis.distributions import Family
from analysis.goodness_of_fit import MIN_SAMPLES, batch_ks
from analysis.moments import user_statistics
from analysis.outage import OutageCurve, default_rate_grid, outage_curve
from errors import CampaignError
from logger import get_logger, log_event, log_stage
from network.config import NetworkConfig
from network.geometry import NetworkLayout, sample_layout
from precoding.zero_forcing import NormalizationCase
from settings import (
    DEFAULT_ANTENNA_SWEEP,
    DEFAULT_DROPS,
    DEFAULT_FADINGS,
    DEFAULT_SEED,
    KS_SIGNIFICANCE,
    QUAD_TOL,
    WORKERS,
)
from simulation.seeding import MASK64, layout_seed
from simulation.statistics import RunningMoments, rmse
from simulation.trials import simulate_drop

logger = get_logger(__name__)

Output = Literal["moments", "kstest", "outage"]
ALL_OUTPUTS: frozenset = frozenset({"moments", "kstest", "outage"})
KS_FAMILIES = (Family.GAMMA, Family.LOGNORMAL, Family.NORMAL)
MAX_ABORTED_FRACTION = 0.01
# Layouts used to place the default rate grid
RATE_GRID_LAYOUTS = 5

STATS = ("mean_S", "var_S", "mean_I", "var_I")


class CampaignSpec(BaseModel):
    """Everything that determines a campaign's output."""

    model_config = ConfigDict(frozen=True)

    config: NetworkConfig = Field(default_factory=NetworkConfig)
    num_drops: int = Field(default=DEFAULT_DROPS, ge=1)
    fadings_per_drop: int = Field(default=DEFAULT_FADINGS, ge=1)
    antenna_sweep: tuple[int, ...] = DEFAULT_ANTENNA_SWEEP
    master_seed: int = Field(default=DEFAULT_SEED, ge=0, le=MASK64)
    outputs: frozenset[Output] = ALL_OUTPUTS
    cases: tuple[NormalizationCase, ...] = (NormalizationCase.INSTANTANEOUS, NormalizationCase.AVERAGE)
    families: tuple[Family, ...] = (Family.GAMMA, Family.LOGNORMAL)
    rate_grid: Optional[tuple[float, ...]] = None
    workers: int = Field(default=WORKERS, ge=1)
    dump_samples: bool = False
    quad_tol: float = Field(default=QUAD_TOL, gt=0)

    @field_validator("families")
    @classmethod
    def check_families(cls, value: tuple[Family, ...]) -> tuple[Family, ...]:
        if Family.NORMAL in value:
            raise ValueError("Outage curves support the gamma and lognormal families only")
        return value

    @field_validator("rate_grid")
    @classmethod
    def check_rate_grid(cls, value):
        if value is not None and (not value or min(value) <= 0):
            raise ValueError("rate_grid must hold positive rates")
        return value

    @model_validator(mode="after")
    def check_sweep(self) -> "CampaignSpec":
        if not self.antenna_sweep:
            raise ValueError("antenna_sweep must name at least one antenna count")
        k = self.config.users_per_cell
        too_small = [m for m in self.antenna_sweep if m <= k]
        if too_small:
            raise ValueError(f"Every antenna count must exceed K={k}, got {too_small}")
        if not self.cases:
            raise ValueError("cases must not be empty")
        return self


@dataclass
class CellResult:
    """Results of one (M, drop) cell; arrays are per user, shape (Q * K,)."""

    antennas: int
    drop: int
    attempted: int
    aborted: int
    analytic: dict = field(default_factory=dict)   # (case, stat) -> array
    empirical: dict = field(default_factory=dict)  # (case, stat) -> array
    sample_count: int = 0
    ks_accepted: dict = field(default_factory=dict)  # family -> bool array
    outage: dict = field(default_factory=dict)       # (case, family) -> OutageCurve
    dump: Optional[np.ndarray] = None


@dataclass
class CampaignResult:
    moments: pd.DataFrame
    kstest: pd.DataFrame
    outage: pd.DataFrame
    rmse: pd.DataFrame
    metadata: dict
    samples: dict = field(default_factory=dict)  # M -> interference samples of user 0
    rate_grid: Optional[np.ndarray] = None

    def moment_summary(self) -> pd.DataFrame:
        """Mean signed relative error over users per (M, case, stat)."""
        if self.moments.empty:
            return pd.DataFrame(columns=["M", "case", "stat", "rel_error"])
        return (
            self.moments.groupby(["M", "case", "stat"], sort=False)["rel_error"]
            .mean()
            .reset_index()
        )


def _run_cell(
    spec: CampaignSpec,
    base_layout: NetworkLayout,
    antennas: int,
    drop: int,
    rate_grid: Optional[np.ndarray],
) -> CellResult:
    config = spec.config.with_antennas(antennas)
    layout = dataclasses.replace(base_layout, config=config)
    samples = simulate_drop(layout, spec.master_seed, drop, spec.fadings_per_drop)
    cell = CellResult(
        antennas=antennas,
        drop=drop,
        attempted=samples.attempted,
        aborted=samples.aborted,
        sample_count=samples.completed,
    )
    if samples.completed == 0:
        return cell

    for case in spec.cases:
        signal, interference = user_statistics(config, layout, case)
        s_samples, i_samples = samples.signal[case], samples.interference[case]
        analytic = {
            "mean_S": signal.mean, "var_S": signal.variance,
            "mean_I": interference.mean, "var_I": interference.variance,
        }
        empirical = {}
        for stat_prefix, values in (("S", s_samples), ("I", i_samples)):
            moments = RunningMoments(values.shape[1:])
            moments.extend(values)
            empirical[f"mean_{stat_prefix}"] = moments.mean
            empirical[f"var_{stat_prefix}"] = moments.variance
        for stat in STATS:
            cell.analytic[(case, stat)] = np.ravel(analytic[stat])
            cell.empirical[(case, stat)] = np.ravel(empirical[stat])

    if "kstest" in spec.outputs and samples.completed >= MIN_SAMPLES and config.num_cells > 1:
        rows = samples.interference[NormalizationCase.INSTANTANEOUS].reshape(samples.completed, -1).T
        for family in KS_FAMILIES:
            _, p_value = batch_ks(rows, family)
            cell.ks_accepted[family] = p_value >= KS_SIGNIFICANCE

    if "outage" in spec.outputs and rate_grid is not None:
        for case in spec.cases:
            s_users, i_users = samples.user_major(case)
            for family in spec.families:
                cell.outage[(case, family)] = outage_curve(
                    layout, case, family, rate_grid, s_users, i_users, spec.quad_tol
                )

    if spec.dump_samples and drop == 0:
        cell.dump = samples.interference[NormalizationCase.INSTANTANEOUS][:, 0, 0].copy()
    log_event(
        logger, "campaign", "Cell M=%d drop=%d done (%d/%d fadings)",
        antennas, drop, samples.completed, samples.attempted, level="debug",
    )
    return cell


def _relative_error(empirical: np.ndarray, analytic: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(analytic != 0, (empirical - analytic) / analytic, np.nan)


def _mean_relative_error(empirical: np.ndarray, analytic: np.ndarray) -> np.ndarray:
    """Per-user mean over drops of the signed relative error; NaN where the analytic value is zero."""
    rel = _relative_error(empirical, analytic)
    valid = ~np.isnan(rel)
    counts = valid.sum(axis=0)
    total = np.where(valid, rel, 0.0).sum(axis=0)
    return np.where(counts > 0, total / np.maximum(counts, 1), np.nan)


def _moment_rows(spec: CampaignSpec, antennas: int, cells: list[CellResult]) -> list[dict]:
    rows = []
    cells = [cell for cell in cells if cell.sample_count > 0]
    if not cells:
        return rows
    for case in spec.cases:
        for stat in STATS:
            analytic = np.stack([cell.analytic[(case, stat)] for cell in cells])
            empirical = np.stack([cell.empirical[(case, stat)] for cell in cells])
            rel = _mean_relative_error(empirical, analytic)
            for user, (a, e, r) in enumerate(zip(analytic.mean(axis=0), empirical.mean(axis=0), rel)):
                rows.append({
                    "M": antennas, "case": int(case), "user": user, "stat": stat,
                    "analytic": a, "empirical": e, "rel_error": r,
                })
    return rows


def _outage_rows(spec: CampaignSpec, antennas: int, cells: list[CellResult], rate_grid: np.ndarray):
    curves, errors = [], []
    for case in spec.cases:
        for family in spec.families:
            per_drop: list[OutageCurve] = [cell.outage[(case, family)] for cell in cells if (case, family) in cell.outage]
            if not per_drop:
                continue
            analytic = np.mean([curve.analytic_average for curve in per_drop], axis=0)
            empirical = np.mean([curve.empirical_average for curve in per_drop], axis=0)
            for rate, a, e in zip(rate_grid, analytic, empirical):
                curves.append({
                    "M": antennas, "case": int(case), "family": family.value,
                    "R0": rate, "analytic": a, "empirical": e,
                })
            errors.append({
                "M": antennas, "case": int(case), "family": family.value,
                "rmse": rmse(analytic, empirical),
                "mean_user_rmse": float(np.mean([curve.user_rmse.mean() for curve in per_drop])),
            })
    return curves, errors


def run_campaign(spec: CampaignSpec) -> CampaignResult:
    """
    Run every (M, drop) cell of the spec and aggregate.

    Raises:
        CampaignError: more than 1% of the (drop, fading) trials aborted
    """
    started = time.perf_counter()
    log_event(
        logger, "campaign",
        "Starting campaign: Q=%d K=%d M=%s, %d drops x %d fadings, seed %d, %d workers",
        spec.config.num_cells, spec.config.users_per_cell, list(spec.antenna_sweep),
        spec.num_drops, spec.fadings_per_drop, spec.master_seed, spec.workers,
    )

    layouts = [sample_layout(spec.config, layout_seed(spec.master_seed, d)) for d in range(spec.num_drops)]

    rate_grid = None
    if "outage" in spec.outputs:
        if spec.rate_grid is not None:
            rate_grid = np.asarray(spec.rate_grid, dtype=float)
        else:
            with log_stage(logger, "outage", "Default rate grid"):
                rate_grid = default_rate_grid(layouts[:RATE_GRID_LAYOUTS], quad_tol=spec.quad_tol)
        log_event(
            logger, "outage", "Rate grid: %d points, %.4g..%.4g nats/s/Hz",
            rate_grid.size, rate_grid[0], rate_grid[-1],
        )

    tasks = [(m, d) for m in spec.antenna_sweep for d in range(spec.num_drops)]
    with log_stage(logger, "campaign", f"{len(tasks)} cells on {spec.workers} workers", level="info"):
        with ThreadPoolExecutor(max_workers=spec.workers) as executor:
            cells = list(executor.map(lambda task: _run_cell(spec, layouts[task[1]], task[0], task[1], rate_grid), tasks))

    attempted = sum(cell.attempted for cell in cells)
    aborted = sum(cell.aborted for cell in cells)
    if aborted:
        log_event(logger, "campaign", "%d of %d trials aborted", aborted, attempted, level="warning")
    if aborted > MAX_ABORTED_FRACTION * attempted:
        raise CampaignError(f"{aborted} of {attempted} trials aborted (limit {MAX_ABORTED_FRACTION:.0%})")

    moment_rows, ks_rows, outage_rows, rmse_rows = [], [], [], []
    samples = {}
    for antennas in spec.antenna_sweep:
        group = [cell for cell in cells if cell.antennas == antennas]
        if "moments" in spec.outputs:
            moment_rows.extend(_moment_rows(spec, antennas, group))
        if "kstest" in spec.outputs:
            for family in KS_FAMILIES:
                accepted = [cell.ks_accepted[family] for cell in group if family in cell.ks_accepted]
                if accepted:
                    ks_rows.append({
                        "M": antennas, "family": family.value,
                        "acceptance_rate": float(np.mean(np.concatenate(accepted))),
                    })
        if rate_grid is not None:
            curves, errors = _outage_rows(spec, antennas, group, rate_grid)
            outage_rows.extend(curves)
            rmse_rows.extend(errors)
        dumps = [cell.dump for cell in group if cell.dump is not None]
        if dumps:
            samples[antennas] = dumps[0]
        log_event(logger, "campaign", "M=%d finished (%d drops)", antennas, len(group))

    result = CampaignResult(
        moments=pd.DataFrame(moment_rows, columns=["M", "case", "user", "stat", "analytic", "empirical", "rel_error"]),
        kstest=pd.DataFrame(ks_rows, columns=["M", "family", "acceptance_rate"]),
        outage=pd.DataFrame(outage_rows, columns=["M", "case", "family", "R0", "analytic", "empirical"]),
        rmse=pd.DataFrame(rmse_rows, columns=["M", "case", "family", "rmse", "mean_user_rmse"]),
        metadata={
            "wall_time_s": round(time.perf_counter() - started, 3),
            "attempted_trials": attempted,
            "aborted_trials": aborted,
            "completed_trials": attempted - aborted,
            "rate_grid": "explicit" if spec.rate_grid is not None else "default",
        },
        samples=samples,
        rate_grid=rate_grid,
    )

    if not result.moments.empty:
        for _, row in result.moment_summary().iterrows():
            log_event(
                logger, "campaign", "M=%d case %d %s: mean relative error %+.4f",
                row["M"], row["case"], row["stat"], row["rel_error"],
            )
    for _, row in result.rmse.iterrows():
        log_event(
            logger, "outage", "M=%d case %d %s: RMSE %.4f",
            row["M"], row["case"], row["family"], row["rmse"],
        )
    return result
