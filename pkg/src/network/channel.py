"""
Small-scale Rayleigh fading and composite channel matrices h = sqrt(l(d)) g.
"""
from dataclasses import dataclass

import numpy as np

from errors import InvalidConfigurationError
from network.geometry import NetworkLayout

_HALF_SQRT = np.sqrt(0.5)


def sample_fading(rng: np.random.Generator, M: int, K: int, leading=()) -> np.ndarray:
    """
    CN(0, 1) entries: independent real and imaginary parts, each N(0, 1/2).

    Returns shape (*leading, M, K).
    """
    if M < 1 or K < 1:
        raise InvalidConfigurationError(f"Fading dimensions must be positive, got {M}x{K}")
    shape = (*tuple(leading), M, K)
    return _HALF_SQRT * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_network_fading(rng: np.random.Generator, layout: NetworkLayout) -> np.ndarray:
    """One fading matrix for every (base station, cell) pair, shape (Q, Q, M, K)."""
    config = layout.config
    q = config.num_cells
    return sample_fading(rng, config.antennas_per_bs, config.users_per_cell, leading=(q, q))


@dataclass(frozen=True)
class ChannelRealization:
    """
    fading[b, q]:     M x K small-scale fading from base station b to the users of cell q
    large_scale[b, q]: length-K gains l(d) on the same links
    channels[b, q]:   fading scaled column-wise by sqrt(large_scale)
    """

    fading: np.ndarray
    large_scale: np.ndarray
    channels: np.ndarray

    def serving(self, q: int) -> np.ndarray:
        """H_q, the M x K channel from base station q to its own users."""
        return self.channels[q, q]

    @property
    def serving_channels(self) -> np.ndarray:
        """All H_q stacked, shape (Q, M, K)."""
        q = np.arange(self.channels.shape[0])
        return self.channels[q, q]


def assemble_channels(layout: NetworkLayout, fading: np.ndarray) -> ChannelRealization:
    """Combine per-link gains from the layout (wraparound distances) with fading matrices."""
    config = layout.config
    expected = (config.num_cells, config.num_cells, config.antennas_per_bs, config.users_per_cell)
    if fading.shape != expected:
        raise InvalidConfigurationError(f"Fading shape {fading.shape} does not match {expected}")
    gains = layout.gains
    channels = np.sqrt(gains)[:, :, None, :] * fading
    return ChannelRealization(fading=fading, large_scale=gains, channels=channels)
