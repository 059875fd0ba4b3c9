# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Unified logging configuration for Wavecraft, with per-run files and banners."""

import atexit
import sys
import time
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path

from loguru import logger

_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level} | {file.path}:{line} - {message}"


def configure_logging(out_dir: Path | None = None, verbose: bool = False) -> Path:
    """Configure loguru with console and per-run file handlers + start/stop banners.

    Args:
        out_dir: Run output directory; logs land in ``out_dir / "logs"``.
        verbose: Lower the console threshold to DEBUG (sweep-level telemetry).

    Returns:
        Path: The log file written for this run.
    """
    # Remove default handlers
    logger.remove()

    # Console on stderr so stdout stays clean for tables
    logger.add(
        sys.stderr,
        level="DEBUG" if verbose else "INFO",
        colorize=True,
        backtrace=True,
        diagnose=False,
        format=_FORMAT,
    )

    log_dir = Path(out_dir or Path.cwd()) / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)

    now = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"wavecraft_{now}.log"

    # File sink keeps the full DEBUG stream, old files cleaned up by retention
    logger.add(
        log_file,
        level="DEBUG",
        retention="7 days",
        backtrace=True,
        diagnose=True,
        format=_FORMAT,
    )

    banner = "=" * 80
    start_time = datetime.now().isoformat(sep=" ", timespec="seconds")
    logger.info(banner)
    logger.info(f"Starting Wavecraft  at {start_time}")
    logger.info(banner)

    def _shutdown_banner() -> None:
        end_time = datetime.now().isoformat(sep=" ", timespec="seconds")
        logger.info(banner)
        logger.info(f"Shutting down Wavecraft  at {end_time}")
        logger.info(banner)

    atexit.register(_shutdown_banner)
    return log_file


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Log entry, exit and wall time of one pipeline stage."""
    logger.info("[{}] start", name)
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.info("[{}] done in {:.3f}s", name, time.perf_counter() - start)
