"""
Exception hierarchy for ZFStats.

Library code raises these; main.py maps them to exit codes.
"""
from typing import Sequence


class ZFStatsError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidConfigurationError(ZFStatsError, ValueError):
    """Parameters that no operation can work with (M <= K, bad campaign sizes...)."""


class UnknownConfigKeyError(InvalidConfigurationError):
    def __init__(self, key: str, valid_keys: Sequence[str]):
        self.key = key
        self.valid_keys = tuple(valid_keys)
        super().__init__(
            f"Unknown config key '{key}'. Valid keys: {', '.join(self.valid_keys)}"
        )


class PathLossDomainError(ZFStatsError, ValueError):
    """Distance below the reference distance; the gain would exceed one."""


class SingularChannelError(ZFStatsError, ArithmeticError):
    """Rank-deficient channel matrix or a zero precoder column."""


class DegenerateDistributionError(ZFStatsError, ValueError):
    """Moment matching asked for a zero-variance distribution."""


class InputError(ZFStatsError, ValueError):
    """Malformed sample data or query arguments."""


class QuadratureError(ZFStatsError, ArithmeticError):
    def __init__(self, message: str, estimate, abserr):
        self.estimate = estimate
        self.abserr = abserr
        super().__init__(f"{message} (estimate={estimate!r}, abserr={abserr!r})")


class CampaignError(ZFStatsError, RuntimeError):
    """Too many Monte Carlo trials aborted for the campaign to be trusted."""
