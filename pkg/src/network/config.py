"""
Network configuration: validated parameters, unit conversions at the config
boundary, and parsing of the plain key = value config file.

All values inside NetworkConfig are linear (watts, meters). dBm only exists in
RunSettings, which mirrors the config file.
"""
import math
import os
from typing import Iterable, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import InvalidConfigurationError, UnknownConfigKeyError
from logger import get_logger, log_event
from settings import DEFAULT_ANTENNA_SWEEP, DEFAULT_SEED

logger = get_logger(__name__)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def noise_power_watts(
    dbm_value: float,
    bandwidth_hz: float,
    mode: Literal["density", "total"] = "density",
) -> float:
    """
    Noise power in watts.

    density: dbm_value is a spectral density in dBm/Hz integrated over the
    bandwidth. total: dbm_value is already the total noise power in dBm.
    """
    if mode == "density":
        return 10.0 ** ((dbm_value + 10.0 * math.log10(bandwidth_hz) - 30.0) / 10.0)
    if mode == "total":
        return dbm_to_watts(dbm_value)
    raise InvalidConfigurationError(f"Unknown noise mode '{mode}'")


class NetworkConfig(BaseModel):
    """Parameters of one multi-cell network with a fixed antenna count."""

    model_config = ConfigDict(frozen=True)

    num_cells: int = 9
    users_per_cell: int = 10
    antennas_per_bs: int = 20
    cell_side: float = 1000.0
    exclusion_radius: float = 20.0
    tx_power: float = Field(default_factory=lambda: dbm_to_watts(45.0))
    noise_power: float = Field(default_factory=lambda: noise_power_watts(-174.0, 900e3))
    path_loss_exponent: float = 3.8
    reference_distance: float = 1.1

    @model_validator(mode="after")
    def check_invariants(self) -> "NetworkConfig":
        side = math.isqrt(self.num_cells) if self.num_cells >= 1 else 0
        if self.num_cells < 1 or side * side != self.num_cells:
            raise ValueError(f"num_cells must be a perfect square >= 1, got {self.num_cells}")
        if self.users_per_cell < 1:
            raise ValueError("users_per_cell must be at least 1")
        if self.antennas_per_bs <= self.users_per_cell:
            raise ValueError(
                f"antennas_per_bs ({self.antennas_per_bs}) must exceed "
                f"users_per_cell ({self.users_per_cell})"
            )
        if self.cell_side <= 0:
            raise ValueError("cell_side must be positive")
        if not 0 <= self.exclusion_radius < self.cell_side / 2:
            raise ValueError("exclusion_radius must lie in [0, cell_side/2)")
        if self.reference_distance >= self.cell_side / 2:
            raise ValueError("reference_distance must be below cell_side/2")
        for name in ("tx_power", "noise_power", "path_loss_exponent", "reference_distance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        return self

    @property
    def grid_side(self) -> int:
        return math.isqrt(self.num_cells)

    @property
    def world_side(self) -> float:
        return self.grid_side * self.cell_side

    def with_antennas(self, antennas: int) -> "NetworkConfig":
        # model_copy skips validation, so rebuild
        return NetworkConfig(**{**self.model_dump(), "antennas_per_bs": antennas})


CONFIG_KEYS = (
    "cells",
    "users_per_cell",
    "antennas",
    "cell_side_m",
    "exclusion_radius_m",
    "tx_power_dbm",
    "noise_density_dbm_hz",
    "bandwidth_hz",
    "noise_mode",
    "noise_power_dbm",
    "alpha",
    "d0_m",
    "seed",
)


class RunSettings(BaseModel):
    """The config file's view of a run; field names match the file keys."""

    model_config = ConfigDict(frozen=True)

    cells: int = 9
    users_per_cell: int = 10
    antennas: tuple[int, ...] = DEFAULT_ANTENNA_SWEEP
    cell_side_m: float = 1000.0
    exclusion_radius_m: float = 20.0
    tx_power_dbm: float = 45.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 900e3
    noise_mode: Literal["density", "total"] = "density"
    noise_power_dbm: float = -174.0
    alpha: float = 3.8
    d0_m: float = 1.1
    seed: int = DEFAULT_SEED

    @field_validator("antennas", mode="before")
    @classmethod
    def parse_antennas(cls, value):
        if isinstance(value, str):
            return tuple(int(part) for part in value.replace(" ", "").split(",") if part)
        if isinstance(value, int):
            return (value,)
        return value

    @field_validator("antennas")
    @classmethod
    def check_antennas(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value:
            raise ValueError("antennas must name at least one value")
        return value

    @property
    def noise_power(self) -> float:
        if self.noise_mode == "total":
            return noise_power_watts(self.noise_power_dbm, self.bandwidth_hz, "total")
        return noise_power_watts(self.noise_density_dbm_hz, self.bandwidth_hz, "density")

    def network_config(self, antennas: Optional[int] = None) -> NetworkConfig:
        """Linear-unit NetworkConfig for one antenna count (default: first of the sweep)."""
        return NetworkConfig(
            num_cells=self.cells,
            users_per_cell=self.users_per_cell,
            antennas_per_bs=antennas if antennas is not None else self.antennas[0],
            cell_side=self.cell_side_m,
            exclusion_radius=self.exclusion_radius_m,
            tx_power=dbm_to_watts(self.tx_power_dbm),
            noise_power=self.noise_power,
            path_loss_exponent=self.alpha,
            reference_distance=self.d0_m,
        )


def parse_overrides(overrides: Iterable[str]) -> dict[str, str]:
    """Turn ['key=value', ...] into a dict, rejecting malformed entries and unknown keys."""
    parsed = {}
    for item in overrides:
        if "=" not in item:
            raise InvalidConfigurationError(f"Override '{item}' is not of the form key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise UnknownConfigKeyError(key, CONFIG_KEYS)
        parsed[key] = value.strip()
    return parsed


def read_config_file(path: str) -> dict[str, str]:
    """Read a key = value file. Raises FileNotFoundError if it is missing."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    values = {key.strip(): value for key, value in dotenv_values(path).items()}
    for key in values:
        if key not in CONFIG_KEYS:
            raise UnknownConfigKeyError(key, CONFIG_KEYS)
    return {key: value for key, value in values.items() if value not in (None, "")}


def load_run_settings(
    config_path: Optional[str] = None,
    overrides: Iterable[str] = (),
) -> RunSettings:
    """
    Layer defaults < config file < command-line overrides into RunSettings.

    Raises:
        FileNotFoundError: config_path given but missing
        UnknownConfigKeyError: a key outside CONFIG_KEYS
        pydantic.ValidationError: a value that does not parse or validate
    """
    values: dict[str, str] = {}
    if config_path:
        values.update(read_config_file(config_path))
        log_event(logger, "config", "Loaded %d keys from %s", len(values), config_path, level="debug")
    command_line = parse_overrides(overrides)
    values.update(command_line)
    if command_line:
        log_event(logger, "config", "Command-line overrides: %s", command_line, level="debug")
    return RunSettings(**values)
