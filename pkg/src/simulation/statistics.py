"""
Running statistics for Monte Carlo samples.
"""
import numpy as np

from errors import InputError


class RunningMoments:
    """
    One-pass mean and unbiased variance (Welford), elementwise over arrays of a
    fixed shape, e.g. one entry per user.
    """

    def __init__(self, shape=()):
        self.count = 0
        self._mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def update(self, value) -> None:
        value = np.asarray(value, dtype=float)
        self.count += 1
        delta = value - self._mean
        self._mean = self._mean + delta / self.count
        self._m2 = self._m2 + delta * (value - self._mean)

    def extend(self, values) -> None:
        """Update with every entry along the first axis."""
        for value in np.asarray(values, dtype=float):
            self.update(value)

    @property
    def mean(self) -> np.ndarray:
        return self._mean.copy()

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self._m2)
        return self._m2 / (self.count - 1)


def rmse(curve_a, curve_b) -> float:
    """
    Root mean square difference of two equally long curves.

    Raises:
        InputError: empty curves or different lengths
    """
    a = np.asarray(curve_a, dtype=float)
    b = np.asarray(curve_b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"Curve lengths differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InputError("Curves must not be empty")
    return float(np.sqrt(np.mean((a - b) ** 2)))
