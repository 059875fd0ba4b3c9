# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Core package for the Wavecraft project."""

from .app import WavecraftApp
from .config import RunConfig, load_config, parse_config

__all__ = ["RunConfig", "WavecraftApp", "load_config", "parse_config"]
