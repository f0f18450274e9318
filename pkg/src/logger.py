"""
Rich-enhanced logging configuration for ZFStats.
Log records go to stderr so CSV written to stdout stays machine-readable.
"""

import logging
import os
import time
from contextlib import contextmanager
from typing import Iterator, Literal, Optional, Union

from rich.console import Console
from rich.logging import RichHandler
from rich.theme import Theme
from rich.traceback import install as install_rich_traceback

# One style per simulation stage
ZFSTATS_THEME = Theme(
    {
        "logging.level.debug": "cyan",
        "logging.level.info": "green bold",
        "logging.level.warning": "yellow bold",
        "logging.level.error": "red bold",
        "logging.level.critical": "white on red bold",
        "event.campaign": "blue",
        "event.outage": "magenta",
        "event.kstest": "cyan",
        "event.config": "bright_black",
    }
)

EventType = Literal["campaign", "outage", "kstest", "config"]
Level = Literal["debug", "info", "warning", "error", "critical"]

# stderr console, stdout is reserved for tables and CSV
console = Console(theme=ZFSTATS_THEME, stderr=True)

# Locals of Monte Carlo frames are large arrays
install_rich_traceback(console=console, show_locals=False)

# Campaign cells log from pool threads, so file records carry the thread name
FILE_FORMAT = "%(asctime)s - %(threadName)s - %(name)s - %(levelname)s - %(message)s"

LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}


def _numeric_level(level: Union[str, int]) -> int:
    # Unknown names fall back to info
    if isinstance(level, str):
        return LOG_LEVELS.get(level.lower(), logging.INFO)
    return level


def setup_logging(
    level: Union[str, int] = "info",
    log_file: Optional[str] = None,
    module_name: str = "zfstats",
) -> logging.Logger:
    """
    Set up logging with Rich formatting.

    Args:
        level: Log level (debug, info, warning, error, critical)
        log_file: Optional file path for saving logs; its directory is created
        module_name: Name of the module requesting the logger

    Returns:
        Configured logger instance
    """
    level = _numeric_level(level)

    # Create handlers
    handlers: list[logging.Handler] = [
        RichHandler(
            console=console,
            rich_tracebacks=True,
            markup=True,
            show_time=True,
            show_path=False,
        )
    ]

    # Add file handler if specified
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        handlers.append(file_handler)

    # Configure root logger
    logging.basicConfig(
        level=level, format="%(message)s", datefmt="[%X]", handlers=handlers
    )
    # basicConfig is a no-op once configured; the level still has to follow
    logging.getLogger().setLevel(level)

    return logging.getLogger(module_name)


def set_level(level: Union[str, int]) -> None:
    """Change the root log level after setup (used by the --log-level flag)."""
    logging.getLogger().setLevel(_numeric_level(level))


def get_logger(module_name: str = "zfstats") -> logging.Logger:
    """Get a logger for the specified module"""
    return logging.getLogger(module_name)


# Event logging helpers
def log_event(
    logger: logging.Logger,
    event_type: EventType,
    message: str,
    *args,
    level: Level = "info",
    **kwargs,
) -> None:
    """
    Log a simulation event with a highlighted event tag.

    Args:
        logger: The logger instance
        event_type: Event category (campaign, outage, kstest, config)
        message: Log message, %-style placeholders allowed
        level: Log level
        *args, **kwargs: Additional arguments for the message
    """
    styled_event = f"[event.{event_type}]{event_type.upper()}[/event.{event_type}]"
    log_method = getattr(logger, level)
    log_method(f"{styled_event}: {message}", *args, **kwargs)


@contextmanager
def log_stage(
    logger: logging.Logger,
    event_type: EventType,
    stage: str,
    level: Level = "debug",
) -> Iterator[None]:
    """Log the wall time of a block as one event when it finishes."""
    started = time.perf_counter()
    yield
    log_event(logger, event_type, "%s took %.2f s", stage, time.perf_counter() - started, level=level)


# Initialize default logger
default_logger = setup_logging(
    level=os.environ.get("ZFSTATS_LOG_LEVEL", "info"),
    log_file=os.environ.get("ZFSTATS_LOG_FILE"),
)
