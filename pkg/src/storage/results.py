"""
Result persistence: CSV tables, the YAML run manifest and sample files.

CSVs use a fixed header, '.' decimals, %.12g floats and '\n' line endings so
identical runs produce identical bytes.
"""
import os
import platform
from enum import Enum
from importlib import metadata
from typing import Any, Optional

import numpy as np
import pandas as pd
import yaml

from errors import InputError
from logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.12g"
MANIFEST_NAME = "manifest.yaml"
SAMPLE_COLUMN = "value"
_VERSIONED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic")


def prepare_output_dir(path: str) -> str:
    """
    Create the output directory if needed and check it is writable.

    Raises:
        PermissionError: the directory exists but cannot be written
        OSError: it cannot be created
    """
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"Output directory is not writable: {path}")
    return path


def write_csv(frame: pd.DataFrame, path: str) -> str:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def _convert_numpy_to_native(obj: Any) -> Any:
    """NumPy and enum values to plain Python types for YAML serialization"""
    if isinstance(obj, Enum):
        return _convert_numpy_to_native(obj.value)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(key): _convert_numpy_to_native(value) for key, value in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(_convert_numpy_to_native(value) for value in obj)
    if isinstance(obj, (list, tuple)):
        return [_convert_numpy_to_native(value) for value in obj]
    return obj


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in _VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(path: str, run: dict) -> str:
    """Write the run record (config, seed, versions, timings) as YAML."""
    document = _convert_numpy_to_native({**run, "versions": package_versions()})
    with open(path, "w", encoding="utf-8") as fp:
        yaml.dump(
            document,
            fp,
            default_flow_style=False,  # Use block style for better readability
            sort_keys=False,           # Maintain key order
            width=10000,               # Prevent unwanted line breaks
            allow_unicode=True,
        )
    logger.info(f"Wrote run manifest to {path}")
    return path


def write_samples(samples, path: str) -> str:
    return write_csv(pd.DataFrame({SAMPLE_COLUMN: np.ravel(samples)}), path)


def read_samples(path: str, column: Optional[str] = None) -> np.ndarray:
    """
    Read one column of samples (default 'value') from a CSV file.

    Raises:
        FileNotFoundError: missing file
        InputError: missing column or non-numeric values
    """
    column = column or SAMPLE_COLUMN
    frame = pd.read_csv(path)
    if column not in frame.columns:
        raise InputError(f"{path} has no '{column}' column (found {', '.join(frame.columns)})")
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    if np.any(np.isnan(values)):
        raise InputError(f"{path} contains missing or non-numeric values in '{column}'")
    return values
