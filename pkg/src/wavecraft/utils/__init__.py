# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Utility helpers used throughout the Wavecraft project."""

from .logger import configure_logging, logger, stage

__all__ = ["configure_logging", "logger", "stage"]
