# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Deterministic JSON and CSV emitters for run artifacts.

Identical inputs give byte-identical files: keys are sorted, floats are
rounded through 17 significant digits, and nothing time-dependent is written.
"""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

import attrs
import cattrs
import numpy as np

SCHEMA_VERSION = 1

_converter = cattrs.Converter()
_converter.register_unstructure_hook(Fraction, lambda q: f"{q.numerator}/{q.denominator}")
_converter.register_unstructure_hook(np.ndarray, lambda a: a.tolist())


def _float(value: float) -> float | None:
    if not math.isfinite(value):
        return None
    return float(f"{value:.17g}")


def to_plain(obj: Any) -> Any:  # noqa: ANN401
    """Reduce attrs records, numpy values, fractions and enums to JSON-ready builtins."""
    if attrs.has(type(obj)):
        obj = _converter.unstructure(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, bool | np.bool_):
        return bool(obj)
    if isinstance(obj, int | np.integer):
        return int(obj)
    if isinstance(obj, float | np.floating):
        return _float(float(obj))
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(key): to_plain(value) for key, value in obj.items()}
    if isinstance(obj, list | tuple):
        return [to_plain(value) for value in obj]
    return obj


def dumps(payload: Mapping[str, Any]) -> str:
    """Serialize ``payload`` with its ``schema_version``."""
    data = {"schema_version": SCHEMA_VERSION, **to_plain(payload)}
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    """Write ``payload`` deterministically to ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")
    return path


def read_json(path: Path) -> dict[str, Any]:
    """Load an artifact written by ``write_json``."""
    return json.loads(path.read_text(encoding="utf-8"))


def format_cell(value: Any) -> str:  # noqa: ANN401
    """CSV cell text: floats in 17 significant digits, booleans lower-case."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a versioned CSV: a ``# schema_version`` comment line, the header, then the rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema_version: {SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    """Read a CSV written by ``write_csv`` into dict rows."""
    with path.open(encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))
