# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Unified location to manage the run output paths for all artifacts."""

from pathlib import Path

_OUT_ROOT: Path | None = None


def set_out_root(path: Path) -> Path:
    """Set (and create) the output directory of the current run."""
    global _OUT_ROOT
    _OUT_ROOT = path.resolve()
    _OUT_ROOT.mkdir(parents=True, exist_ok=True)
    return _OUT_ROOT


def get_out_root() -> Path:
    """Return the output root path, or raise if not set."""
    if _OUT_ROOT is None:
        raise RuntimeError("OUT_ROOT not set. Call set_out_root() at run startup.")
    return _OUT_ROOT


def spectrum_csv() -> Path:
    """Return path to the spectrum table export."""
    return get_out_root() / "spectrum.csv"


def arithmetic_json() -> Path:
    """Return path to the arithmetic profile and spectral constants export."""
    return get_out_root() / "arithmetic.json"


def verify_json() -> Path:
    """Return path to the verification suite report."""
    return get_out_root() / "verify.json"


def solutions_json() -> Path:
    """Return path to the critical point report."""
    return get_out_root() / "solutions.json"


def landscape_csv() -> Path:
    """Return path to the dense reduced-functional scan."""
    return get_out_root() / "landscape.csv"


def sample_csv(solution_id: int) -> Path:
    """Return path to the (t, r, u) samples of one solution."""
    return get_out_root() / f"sample_{solution_id}.csv"
