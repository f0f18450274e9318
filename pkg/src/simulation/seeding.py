"""
Platform-independent child seeds for (antenna count, drop, fading) trials.

child = splitmix64(master ^ splitmix64(key)), key = M << 48 | drop << 24 | fading.
Both steps are bijections on 64-bit integers and the key packing is injective
within the field widths, so distinct trials never share a seed.
"""
import numpy as np

from errors import InvalidConfigurationError

MASK64 = (1 << 64) - 1
_ANTENNA_BITS = 16
_INDEX_BITS = 24


def splitmix64(value: int) -> int:
    """One splitmix64 output for state `value` (Steele, Lea and Flood)."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_key(antennas: int, drop: int, fading: int) -> int:
    if not 0 <= antennas < 1 << _ANTENNA_BITS:
        raise InvalidConfigurationError(f"Antenna count {antennas} does not fit the seed layout")
    for name, index in (("drop", drop), ("fading", fading)):
        if not 0 <= index < 1 << _INDEX_BITS:
            raise InvalidConfigurationError(f"{name} index {index} does not fit the seed layout")
    return (antennas << (2 * _INDEX_BITS)) | (drop << _INDEX_BITS) | fading


def child_seed(master_seed: int, antennas: int, drop: int, fading: int) -> int:
    return splitmix64((master_seed & MASK64) ^ splitmix64(trial_key(antennas, drop, fading)))


def layout_seed(master_seed: int, drop: int) -> int:
    """Seed of a drop's user positions; antenna count 0 so every M sees the same layout."""
    return child_seed(master_seed, 0, drop, 0)


def trial_rng(master_seed: int, antennas: int, drop: int, fading: int) -> np.random.Generator:
    return np.random.default_rng(child_seed(master_seed, antennas, drop, fading))
