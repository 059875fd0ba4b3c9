# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Entrypoint for ``python -m wavecraft``."""

from .app.cli import main

if __name__ == "__main__":
    main()
