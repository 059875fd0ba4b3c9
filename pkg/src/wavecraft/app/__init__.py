# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Application package for the Wavecraft project."""

from .wavecraft_app import WavecraftApp

__all__ = ["WavecraftApp"]
