"""
Wraparound square-grid geometry: base station placement, user drops and
distance-based path loss.

Cells are indexed row-major, q = row * grid_side + col, and the grid is a
torus of side grid_side * cell_side.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from errors import InvalidConfigurationError, PathLossDomainError
from logger import get_logger
from network.config import NetworkConfig

logger = get_logger(__name__)

MAX_ATTEMPTS_PER_USER = 10**6


def wrap_distance(a, b, world_side: float):
    """
    Shortest distance between points a and b on a torus of side world_side.

    Equivalent to the minimum over the 9 toroidal images of b when both points
    lie in [0, world_side)^2. Broadcasts over leading axes; the last axis holds
    the (x, y) coordinates.
    """
    delta = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    delta = np.minimum(delta, world_side - delta)
    distance = np.hypot(delta[..., 0], delta[..., 1])
    return float(distance) if distance.ndim == 0 else distance


def path_loss(d, alpha: float, d0: float):
    """
    Large-scale gain (d/d0)^(-alpha).

    Raises:
        PathLossDomainError: any d < d0
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < d0):
        raise PathLossDomainError(
            f"Distance {float(np.min(d)):.6g} m is below the reference distance {d0} m"
        )
    gain = (d / d0) ** (-alpha)
    return float(gain) if gain.ndim == 0 else gain


def base_station_positions(config: NetworkConfig) -> np.ndarray:
    """Cell centers, shape (Q, 2)."""
    side = config.grid_side
    rows, cols = np.divmod(np.arange(config.num_cells), side)
    return np.column_stack(((cols + 0.5) * config.cell_side, (rows + 0.5) * config.cell_side))


@dataclass(frozen=True)
class NetworkLayout:
    """One drop: base stations at cell centers and K users per cell."""

    bs_positions: np.ndarray    # (Q, 2)
    user_positions: np.ndarray  # (Q, K, 2)
    config: NetworkConfig

    def __post_init__(self):
        q, k = self.config.num_cells, self.config.users_per_cell
        if self.bs_positions.shape != (q, 2):
            raise InvalidConfigurationError(f"Expected {q} base stations, got {self.bs_positions.shape}")
        if self.user_positions.shape != (q, k, 2):
            raise InvalidConfigurationError(
                f"Expected user positions of shape {(q, k, 2)}, got {self.user_positions.shape}"
            )

    def distances(self) -> np.ndarray:
        """Wraparound distances d[b, q, k] from base station b to user k of cell q."""
        return wrap_distance(
            self.bs_positions[:, None, None, :],
            self.user_positions[None, :, :, :],
            self.config.world_side,
        )

    @cached_property
    def gains(self) -> np.ndarray:
        """Large-scale gains l[b, q, k]; the serving gains sit on the b == q diagonal."""
        return path_loss(
            self.distances(),
            self.config.path_loss_exponent,
            self.config.reference_distance,
        )

    @property
    def serving_gains(self) -> np.ndarray:
        """l[q, q, k] for every cell, shape (Q, K)."""
        q = np.arange(self.config.num_cells)
        return self.gains[q, q, :]


def min_user_distance(config: NetworkConfig) -> float:
    """Closest a user may sit to its serving base station: the larger of exclusion_radius and d0."""
    return max(config.exclusion_radius, config.reference_distance)


def sample_layout(config: NetworkConfig, rng_seed) -> NetworkLayout:
    """
    Drop K users uniformly in every cell square, rejecting points closer than
    min_user_distance to the serving base station, so every serving gain is
    inside the path-loss domain.

    rng_seed may be an int or a numpy SeedSequence; the same seed always gives
    the same layout.

    Raises:
        InvalidConfigurationError: more than MAX_ATTEMPTS_PER_USER draws without
            accepting the next user of a cell
    """
    rng = np.random.default_rng(rng_seed)
    bs = base_station_positions(config)
    k = config.users_per_cell
    users = np.empty((config.num_cells, k, 2))
    radius = min_user_distance(config)

    for q, center in enumerate(bs):
        corner = center - config.cell_side / 2
        accepted = np.empty((0, 2))
        stalled = 0  # draws since the last accepted user
        while len(accepted) < k:
            batch_size = max(2 * (k - len(accepted)), 16)
            candidates = corner + rng.uniform(0.0, config.cell_side, size=(batch_size, 2))
            keep = np.hypot(*(candidates - center).T) >= radius
            stalled = 0 if np.any(keep) else stalled + batch_size
            accepted = np.vstack((accepted, candidates[keep]))
            if stalled > MAX_ATTEMPTS_PER_USER:
                raise InvalidConfigurationError(
                    f"Rejection sampling exceeded {MAX_ATTEMPTS_PER_USER} attempts for one user in cell {q}"
                )
        users[q] = accepted[:k]

    return NetworkLayout(bs_positions=bs, user_positions=users, config=config)
