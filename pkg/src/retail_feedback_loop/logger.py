"""Centralized logging with a rotating log file under the output root."""

from __future__ import annotations

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

_LOG_DIR: Path | None = None
_CONFIGURED = False

# 5 MB per file, keep 3 backups
MAX_BYTES = 5 * 1024 * 1024
BACKUP_COUNT = 3

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

PACKAGE_LOGGER = "retail_feedback_loop"
LOG_FILE_NAME = "retail_feedback_loop.log"


def setup_logging(log_dir: Path | None = None, verbose: bool = False) -> None:
    """Configure package logging. Should be called once at startup.

    Creates ``<log_dir>/retail_feedback_loop.log`` with a rotating file
    handler that captures everything, and a stderr handler for progress.

    Args:
        log_dir: Directory for the log file. Only stderr logging if None.
        verbose: Emit DEBUG records on stderr instead of INFO.
    """
    global _LOG_DIR, _CONFIGURED  # noqa: PLW0603

    if _CONFIGURED:
        return

    root_logger = logging.getLogger(PACKAGE_LOGGER)
    root_logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_dir is not None:
        _LOG_DIR = log_dir
        _LOG_DIR.mkdir(parents=True, exist_ok=True)

        # Rotating file handler, captures everything
        file_handler = RotatingFileHandler(
            _LOG_DIR / LOG_FILE_NAME,
            maxBytes=MAX_BYTES,
            backupCount=BACKUP_COUNT,
            encoding="utf-8",
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    _CONFIGURED = True
    root_logger.debug("Logging initialized")
    if _LOG_DIR is not None:
        root_logger.debug("Log directory: %s", _LOG_DIR)


def get_logger(name: str) -> logging.Logger:
    """Get a logger for the given module.

    Args:
        name: Module name, typically __name__.

    Returns:
        Logger instance under the retail_feedback_loop namespace.
    """
    # Strip prefix if already fully qualified
    if name.startswith(f"{PACKAGE_LOGGER}."):
        return logging.getLogger(name)
    return logging.getLogger(f"{PACKAGE_LOGGER}.{name}")
