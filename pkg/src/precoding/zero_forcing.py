"""
Zero-forcing precoding with instantaneous (case 1) or average (case 2) power
normalization, and the per-user received powers it produces.

Every function accepts stacked inputs: arrays of shape (..., M, K) are
treated as independent M x K matrices.
"""
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from errors import InvalidConfigurationError, SingularChannelError
from network.channel import ChannelRealization

# Largest accepted condition number of H^H H
MAX_CONDITION = 1e12


class NormalizationCase(IntEnum):
    """Beamformer power normalization"""
    INSTANTANEOUS = 1
    AVERAGE = 2


@dataclass(frozen=True)
class PrecodingResult:
    raw_precoder: np.ndarray  # W~, (..., M, K)
    normalizers: np.ndarray   # mu or mu-bar, (..., K)
    precoder: np.ndarray      # W = W~ diag(normalizers)
    case: NormalizationCase

    def total_power(self) -> np.ndarray:
        """tr{W W^H} per matrix."""
        return np.sum(np.abs(self.precoder) ** 2, axis=(-2, -1))


def zf_raw(H) -> np.ndarray:
    """
    Pseudo-inverse W~ = H (H^H H)^{-1}, computed from the reduced QR factorization
    H = Q R as W~ = Q R^{-H}, so H^H W~ = I without forming H^H H.

    Raises:
        SingularChannelError: M < K, or cond(H^H H) above MAX_CONDITION
    """
    H = np.asarray(H, dtype=complex)
    M, K = H.shape[-2:]
    if M < K:
        raise SingularChannelError(f"Zero forcing needs M >= K, got {M}x{K}")

    Q, R = np.linalg.qr(H)
    singular_values = np.linalg.svd(R, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = (singular_values[..., 0] / singular_values[..., -1]) ** 2
    if np.any(~np.isfinite(condition) | (condition > MAX_CONDITION)):
        raise SingularChannelError(
            f"Channel is rank deficient (cond(H^H H) = {float(np.max(condition)):.3g})"
        )

    identity = np.broadcast_to(np.eye(K, dtype=complex), R.shape)
    R_inv_h = np.linalg.solve(np.conj(np.swapaxes(R, -1, -2)), identity)
    return Q @ R_inv_h


def _column_power(W: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(W) ** 2, axis=-2)


def normalize_instantaneous(raw_precoder) -> PrecodingResult:
    """mu_k = 1 / sqrt(K ||w~_k||^2): every column gets norm 1/sqrt(K), tr{W W^H} = 1."""
    raw_precoder = np.asarray(raw_precoder, dtype=complex)
    K = raw_precoder.shape[-1]
    power = _column_power(raw_precoder)
    if np.any(power == 0):
        raise SingularChannelError("Precoder has a zero column")
    normalizers = 1.0 / np.sqrt(K * power)
    return PrecodingResult(
        raw_precoder=raw_precoder,
        normalizers=normalizers,
        precoder=raw_precoder * normalizers[..., None, :],
        case=NormalizationCase.INSTANTANEOUS,
    )


def average_normalizers(serving_gains, M: int, K: int) -> np.ndarray:
    """mu-bar_k = sqrt(l_k (M - K) / K), from E{[(H^H H)^{-1}]_kk} = 1 / ((M - K) l_k)."""
    if M <= K:
        raise InvalidConfigurationError(f"Average normalization needs M > K, got M={M}, K={K}")
    gains = np.asarray(serving_gains, dtype=float)
    if np.any(gains <= 0):
        raise InvalidConfigurationError("Serving gains must be positive")
    return np.sqrt(gains * (M - K) / K)


def normalize_average(raw_precoder, serving_gains, M: int, K: int) -> PrecodingResult:
    """
    Scale columns by the deterministic mu-bar; the power constraint then holds only
    on average over the fading, E{tr{W W^H}} = 1.
    """
    raw_precoder = np.asarray(raw_precoder, dtype=complex)
    normalizers = average_normalizers(serving_gains, M, K)
    return PrecodingResult(
        raw_precoder=raw_precoder,
        normalizers=normalizers,
        precoder=raw_precoder * normalizers[..., None, :],
        case=NormalizationCase.AVERAGE,
    )


def precode(realization: ChannelRealization, case: NormalizationCase, raw_precoder=None) -> PrecodingResult:
    """Precoders of every cell for one realization; pass raw_precoder to reuse W~."""
    if raw_precoder is None:
        raw_precoder = zf_raw(realization.serving_channels)
    if case == NormalizationCase.INSTANTANEOUS:
        return normalize_instantaneous(raw_precoder)
    M, K = raw_precoder.shape[-2:]
    q = np.arange(realization.large_scale.shape[0])
    return normalize_average(raw_precoder, realization.large_scale[q, q], M, K)


def received_powers(precoders, realization: ChannelRealization, tx_power: float):
    """
    Per-user signal and inter-cell interference powers.

    S[q, k] = p |w_qk^H h_{q,qk}|^2
    I[q, k] = p sum_{b != q} sum_j |w_bj^H h_{b,qk}|^2

    Args:
        precoders: PrecodingResult or array of W, shape (Q, M, K)
        realization: channels of the same network
        tx_power: p in watts

    Returns:
        (S, I), each of shape (Q, K) in watts
    """
    W = precoders.precoder if isinstance(precoders, PrecodingResult) else np.asarray(precoders)
    # products[b, q, j, k] = w_bj^H h_{b,qk}
    products = np.conj(np.swapaxes(W, -1, -2))[:, None] @ realization.channels
    power = np.abs(products) ** 2

    num_cells = W.shape[0]
    cells = np.arange(num_cells)
    signal = tx_power * np.diagonal(power[cells, cells], axis1=-2, axis2=-1)

    per_link = power.sum(axis=2)  # (b, q, k)
    other_cell = ~np.eye(num_cells, dtype=bool)[:, :, None]
    interference = tx_power * np.where(other_cell, per_link, 0.0).sum(axis=0)
    return signal, interference


def spectral_efficiency(signal, interference, noise_power: float, units: str = "nats"):
    """Achievable rate ln(1 + S / (I + noise)) per user; units 'bits' uses log2."""
    sinr = np.asarray(signal, dtype=float) / (np.asarray(interference, dtype=float) + noise_power)
    rate = np.log1p(sinr)
    if units == "bits":
        return rate / np.log(2.0)
    if units != "nats":
        raise InvalidConfigurationError(f"Unknown rate units '{units}'")
    return rate


def nats_from_bits(rate):
    return np.asarray(rate, dtype=float) * np.log(2.0)
