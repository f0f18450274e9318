"""
Monte Carlo trials of one drop: fading realizations over a fixed layout, both
normalizations computed from the same pseudo-inverse.
"""
from dataclasses import dataclass, field

import numpy as np

from errors import ZFStatsError
from logger import get_logger
from network.channel import assemble_channels, sample_network_fading
from network.geometry import NetworkLayout
from precoding.zero_forcing import NormalizationCase, precode, received_powers, zf_raw
from simulation.seeding import trial_rng

logger = get_logger(__name__)

CASES = (NormalizationCase.INSTANTANEOUS, NormalizationCase.AVERAGE)


def simulate_fading(layout: NetworkLayout, rng: np.random.Generator) -> dict:
    """One fading realization; returns {case: (S, I)} with arrays of shape (Q, K)."""
    realization = assemble_channels(layout, sample_network_fading(rng, layout))
    raw = zf_raw(realization.serving_channels)
    powers = {}
    for case in CASES:
        result = precode(realization, case, raw_precoder=raw)
        powers[case] = received_powers(result, realization, layout.config.tx_power)
    return powers


@dataclass
class DropSamples:
    """Per-case samples of shape (n, Q, K), n the number of completed fadings."""

    signal: dict = field(default_factory=dict)
    interference: dict = field(default_factory=dict)
    attempted: int = 0
    aborted: int = 0

    @property
    def completed(self) -> int:
        return self.attempted - self.aborted

    def user_major(self, case: NormalizationCase) -> tuple[np.ndarray, np.ndarray]:
        """(S, I) with the fading axis last, shape (Q, K, n)."""
        return np.moveaxis(self.signal[case], 0, -1), np.moveaxis(self.interference[case], 0, -1)


def simulate_drop(layout: NetworkLayout, master_seed: int, drop: int, fadings: int) -> DropSamples:
    """
    Run `fadings` trials on a layout, each with its own child RNG. A trial that
    raises a ZFStatsError is dropped and counted as aborted.
    """
    antennas = layout.config.antennas_per_bs
    collected = {case: ([], []) for case in CASES}
    aborted = 0
    for fading in range(fadings):
        try:
            powers = simulate_fading(layout, trial_rng(master_seed, antennas, drop, fading))
        except ZFStatsError as e:
            aborted += 1
            logger.debug(f"Trial (M={antennas}, drop={drop}, fading={fading}) aborted: {e}")
            continue
        for case, (signal, interference) in powers.items():
            collected[case][0].append(signal)
            collected[case][1].append(interference)

    q, k = layout.config.num_cells, layout.config.users_per_cell
    samples = DropSamples(attempted=fadings, aborted=aborted)
    for case, (signal, interference) in collected.items():
        samples.signal[case] = np.array(signal).reshape(-1, q, k)
        samples.interference[case] = np.array(interference).reshape(-1, q, k)
    return samples
