"""
Independent reference computations used to validate the closed forms:
Wishart sampling, two-stream Monte Carlo outage and 2-D grid integration.
"""
import numpy as np

from analysis.distributions import FittedDistribution
from analysis.outage import TRUNCATION_LEVEL, empirical_outage
from network.channel import sample_fading

SAMPLE_BATCH = 10_000
OUTAGE_BATCH = 1_000_000


def _inverse_grams(rng: np.random.Generator, M: int, K: int, n: int):
    remaining = n
    while remaining > 0:
        size = min(remaining, SAMPLE_BATCH)
        G = sample_fading(rng, M, K, leading=(size,))
        gram = np.conj(np.swapaxes(G, -1, -2)) @ G
        yield np.linalg.inv(gram)
        remaining -= size


def inverse_wishart_diagonal(rng: np.random.Generator, M: int, K: int, n: int, k: int = 0) -> np.ndarray:
    """n samples of 1 / [(G^H G)^-1]_kk for M x K CN(0, 1) matrices G; Gamma(M-K+1, 1) distributed."""
    return np.concatenate([1.0 / inverse[:, k, k].real for inverse in _inverse_grams(rng, M, K, n)])


def inverse_wishart_trace(rng: np.random.Generator, M: int, K: int, n: int) -> np.ndarray:
    """n samples of tr{(G^H G)^-1}, whose mean is K / (M - K)."""
    return np.concatenate([
        np.trace(inverse, axis1=-2, axis2=-1).real for inverse in _inverse_grams(rng, M, K, n)
    ])


def brute_force_outage(
    signal,
    interference,
    noise_power: float,
    target_rate,
    n: int,
    rng: np.random.Generator,
):
    """
    P{S <= (e^R0 - 1)(I + noise)} from n independent draws of S and of I.

    signal may be a FittedDistribution or a constant power; interference may be None.
    """
    hits = 0.0
    remaining = n
    while remaining > 0:
        size = min(remaining, OUTAGE_BATCH)
        if isinstance(signal, FittedDistribution):
            s = signal.sample(rng, size)
        else:
            s = np.full(size, float(signal))
        i = interference.sample(rng, size) if interference is not None else np.zeros(size)
        hits = hits + np.asarray(empirical_outage(s, i, noise_power, target_rate)) * size
        remaining -= size
    result = hits / n
    return float(result) if np.ndim(result) == 0 else result


def grid_outage(
    signal: FittedDistribution,
    interference: FittedDistribution,
    noise_power: float,
    target_rate: float,
    points: int = 2000,
) -> float:
    """
    Midpoint-rule integral of f_S(s) f_I(i) over {s <= (e^R0 - 1)(i + noise)}.

    Both axes stop at the 1 - 1e-9 quantiles. In each interference row the
    signal cell cut by the boundary is weighted by the fraction lying inside.
    """
    threshold = float(np.expm1(target_rate))
    s_max = float(signal.quantile(TRUNCATION_LEVEL))
    i_max = float(interference.quantile(TRUNCATION_LEVEL))

    hs, hi = s_max / points, i_max / points
    s_low = np.arange(points) * hs
    s_mid = s_low + 0.5 * hs
    i_mid = (np.arange(points) + 0.5) * hi

    boundary = threshold * (i_mid + noise_power)
    weights = np.clip((boundary[:, None] - s_low[None, :]) / hs, 0.0, 1.0) * hs
    inner = weights @ np.asarray(signal.pdf(s_mid))
    return float(np.sum(np.asarray(interference.pdf(i_mid)) * inner) * hi)
