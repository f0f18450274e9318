"""
Subcommand handlers for the zfstats command line.

Each handler takes the parsed argparse namespace and returns an exit code.
Exceptions propagate to main.py, which maps them to exit codes.
"""
import argparse
import os
import sys
from typing import Optional

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from analysis.distributions import Family
from analysis.goodness_of_fit import fit_battery
from analysis.moments import user_statistics
from analysis.outage import parse_rate_grid
from errors import InvalidConfigurationError
from logger import get_logger, log_event
from network.config import RunSettings, load_run_settings
from network.geometry import sample_layout
from precoding.zero_forcing import NormalizationCase
from settings import DEFAULT_DROPS, DEFAULT_FADINGS, FULL_PROTOCOL, OUTPUT_DIR, WORKERS
from simulation.campaign import ALL_OUTPUTS, CampaignResult, CampaignSpec, run_campaign
from simulation.presets import check_fig1, preset_spec
from simulation.seeding import layout_seed
from storage.results import (
    FLOAT_FORMAT,
    MANIFEST_NAME,
    prepare_output_dir,
    read_samples,
    write_csv,
    write_manifest,
    write_samples,
)

logger = get_logger(__name__)

# Tables go to stdout; logs stay on stderr
stdout = Console()


def settings_from_args(args: argparse.Namespace) -> RunSettings:
    """Defaults < config file < --set overrides < dedicated flags (--seed, --antennas)."""
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "antennas", None):
        overrides.append(f"antennas={args.antennas}")
    try:
        return load_run_settings(args.config, overrides)
    except FileNotFoundError as e:
        raise InvalidConfigurationError(f"--config: {e}") from e


def _output_dir(args: argparse.Namespace) -> str:
    return prepare_output_dir(args.output_dir or OUTPUT_DIR)


def _workers(args: argparse.Namespace) -> int:
    return args.workers or WORKERS


def _protocol(args: argparse.Namespace) -> tuple[int, int]:
    if getattr(args, "full_protocol", False):
        return FULL_PROTOCOL["drops"], FULL_PROTOCOL["fadings"]
    return args.drops or DEFAULT_DROPS, args.fadings or DEFAULT_FADINGS


def _rate_grid(args: argparse.Namespace) -> Optional[tuple[float, ...]]:
    if not args.rate_grid:
        return None
    try:
        return tuple(parse_rate_grid(args.rate_grid, args.rate_units))
    except ValueError as e:
        raise InvalidConfigurationError(f"--rate-grid: {e}") from e


def _manifest(spec: CampaignSpec, result: CampaignResult, command: str) -> dict:
    return {
        "command": command,
        "master_seed": spec.master_seed,
        "spec": spec.model_dump(exclude={"workers"}),
        "rate_grid": result.rate_grid,
        "run": result.metadata,
    }


def write_campaign_outputs(spec: CampaignSpec, result: CampaignResult, output_dir: str, command: str) -> list[str]:
    """Write the requested CSVs, sample dumps and the run manifest; returns the paths written."""
    written = []
    if "moments" in spec.outputs:
        written.append(write_csv(result.moments, os.path.join(output_dir, "moments.csv")))
    if "kstest" in spec.outputs:
        written.append(write_csv(result.kstest, os.path.join(output_dir, "kstest.csv")))
    if "outage" in spec.outputs:
        written.append(write_csv(result.outage, os.path.join(output_dir, "outage.csv")))
        written.append(write_csv(result.rmse, os.path.join(output_dir, "rmse.csv")))
    for antennas, samples in result.samples.items():
        written.append(write_samples(samples, os.path.join(output_dir, f"samples_M{antennas}.csv")))
    written.append(write_manifest(os.path.join(output_dir, MANIFEST_NAME), _manifest(spec, result, command)))
    return written


def analytic_table(settings: RunSettings) -> pd.DataFrame:
    """Closed-form statistics of every user of the seeded layout, for each M and case."""
    base = settings.network_config()
    layout = sample_layout(base, layout_seed(settings.seed, 0))
    rows = []
    for antennas in settings.antennas:
        config = base.with_antennas(antennas)
        for case in NormalizationCase:
            signal, interference = user_statistics(config, layout, case)
            for user, values in enumerate(zip(
                np.ravel(signal.mean), np.ravel(signal.variance),
                np.ravel(interference.mean), np.ravel(interference.variance),
            )):
                rows.append({"M": antennas, "user": user, "case": int(case), **dict(zip(
                    ("mean_S", "var_S", "mean_I", "var_I"), values
                ))})
    return pd.DataFrame(rows, columns=["M", "user", "case", "mean_S", "var_S", "mean_I", "var_I"])


def cmd_analytic(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    frame = analytic_table(settings)

    table = Table(title=f"Closed-form statistics (seed {settings.seed}, watts)")
    for column in ("M", "user", "case", "E{S}", "Var{S}", "E{I}", "Var{I}"):
        table.add_column(column, justify="right")
    for row in frame.itertuples(index=False):
        table.add_row(
            str(row.M), str(row.user), str(row.case),
            f"{row.mean_S:.4e}", f"{row.var_S:.4e}", f"{row.mean_I:.4e}", f"{row.var_I:.4e}",
        )
    stdout.print(table)

    if args.csv:
        write_csv(frame, os.path.join(_output_dir(args), "analytic.csv"))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    output_dir = _output_dir(args)
    drops, fadings = _protocol(args)
    outputs = frozenset(part.strip() for part in args.outputs.split(",")) if args.outputs else ALL_OUTPUTS
    unknown = outputs - ALL_OUTPUTS
    if unknown:
        raise InvalidConfigurationError(
            f"--outputs: unknown artifact(s) {sorted(unknown)}; choose from {sorted(ALL_OUTPUTS)}"
        )

    spec = CampaignSpec(
        config=settings.network_config(),
        num_drops=drops,
        fadings_per_drop=fadings,
        antenna_sweep=settings.antennas,
        master_seed=settings.seed,
        outputs=outputs,
        cases=tuple(args.case) if args.case else (1, 2),
        families=tuple(args.family) if args.family else (Family.GAMMA, Family.LOGNORMAL),
        rate_grid=_rate_grid(args),
        workers=_workers(args),
        dump_samples=args.dump_samples,
    )
    result = run_campaign(spec)
    write_campaign_outputs(spec, result, output_dir, "simulate")
    return 0


def cmd_kstest(args: argparse.Namespace) -> int:
    samples = read_samples(args.samples, args.column)
    results = fit_battery(samples)
    frame = pd.DataFrame(
        [
            {
                "family": family.value,
                "D": result.statistic,
                "p_value": result.p_value,
                "reject_5pct": result.reject_at_5pct,
            }
            for family, result in results.items()
        ],
        columns=["family", "D", "p_value", "reject_5pct"],
    )
    log_event(logger, "kstest", "Tested %d samples from %s", samples.size, args.samples)
    frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return 0


def cmd_outage(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    output_dir = _output_dir(args)
    drops, fadings = _protocol(args)
    case = NormalizationCase(args.case)
    family = Family(args.family)
    antennas = settings.antennas[0]

    spec = CampaignSpec(
        config=settings.network_config(antennas),
        num_drops=drops,
        fadings_per_drop=fadings,
        antenna_sweep=(antennas,),
        master_seed=settings.seed,
        outputs=frozenset({"outage"}),
        cases=(case,),
        families=(family,),
        rate_grid=_rate_grid(args),
        workers=_workers(args),
    )
    result = run_campaign(spec)

    curve = result.outage
    rates = curve["R0"].to_numpy()
    if args.rate_units == "bits":
        rates = rates / np.log(2.0)
    frame = pd.DataFrame({
        "R0": rates,
        "analytic_outage": curve["analytic"].to_numpy(),
        "empirical_outage": curve["empirical"].to_numpy(),
    })
    frame["abs_error"] = (frame["analytic_outage"] - frame["empirical_outage"]).abs()

    path = os.path.join(output_dir, f"outage_case{int(case)}_{family.value}.csv")
    write_csv(frame, path)
    write_manifest(os.path.join(output_dir, MANIFEST_NAME), _manifest(spec, result, "outage"))
    frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    output_dir = prepare_output_dir(os.path.join(args.output_dir or OUTPUT_DIR, args.figure))
    drops, fadings = _protocol(args)
    spec = preset_spec(
        args.figure,
        settings,
        num_drops=drops,
        fadings_per_drop=fadings,
        workers=_workers(args),
        dump_samples=args.dump_samples or None,
    )
    result = run_campaign(spec)
    if args.figure == "fig1":
        check_fig1(result)
    write_campaign_outputs(spec, result, output_dir, f"reproduce {args.figure}")
    return 0


HANDLERS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "kstest": cmd_kstest,
    "outage": cmd_outage,
    "reproduce": cmd_reproduce,
}
