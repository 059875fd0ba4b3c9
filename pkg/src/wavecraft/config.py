# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Run configuration: TOML file -> frozen attrs sections, with line-numbered diagnostics.

A run file looks like::

    [problem]
    n = 1
    R_coef = "1/2"     # R = R_coef * pi
    T_coef = "2"       # T = T_coef * pi
    mu = 1.5
    beta = 6.0
    eta = 0.5

    [nonlinearity]
    id = "arctan"
    params = {}

    [truncation]
    j_max = 12
    k_max = 24
    nt = 128
    nr = 96

    [tolerances]
    tol_inner = 1e-9
    tol_outer = 1e-6
    delta_min = 1e-6

    [search]
    seed = 20240611
"""

import math
import numbers
import re
import tomllib
from fractions import Fraction
from pathlib import Path
from typing import Any

import attrs
import cattrs
from attrs import define, field

from wavecraft.errors import ConfigError
from wavecraft.spectral.spectrum import ProblemConfig


class FieldProblem(ValueError):
    """A single field failed validation; carries the field name for diagnostics."""

    def __init__(self, name: str, message: str) -> None:
        """Remember which key is at fault."""
        self.name = name
        super().__init__(f"{name} {message}")


def _positive(instance: object, attribute: attrs.Attribute, value: float) -> None:
    if not value > 0:
        raise FieldProblem(attribute.name, f"must be positive, got {value}")


def _at_least(bound: int):  # noqa: ANN202
    def check(instance: object, attribute: attrs.Attribute, value: int) -> None:
        if value < bound:
            raise FieldProblem(attribute.name, f"must be >= {bound}, got {value}")

    return check


def _finite(instance: object, attribute: attrs.Attribute, value: float) -> None:
    if not math.isfinite(value):
        raise FieldProblem(attribute.name, f"must be finite, got {value}")


def _rational(name: str):  # noqa: ANN202
    """Build a converter parsing a rational written as ``"p/q"`` (or an integer) exactly."""

    def convert(value: Any) -> Fraction:  # noqa: ANN401
        if isinstance(value, Fraction):
            return value
        if isinstance(value, bool | float):
            raise FieldProblem(name, "must be a \"p/q\" string or an integer, floats are not exact")
        try:
            return Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise FieldProblem(name, f"is not a rational: {value!r}") from exc

    return convert


def _integer(name: str):  # noqa: ANN202
    """Build a converter accepting only integral TOML numbers; 12.0 passes, 12.7 and booleans do not."""

    def convert(value: Any) -> int:  # noqa: ANN401
        if isinstance(value, numbers.Integral) and not isinstance(value, bool):
            return int(value)
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise FieldProblem(name, f"must be an integer, got {value!r}")

    return convert


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


@define(frozen=True)
class ProblemSection:
    """Physical problem: dimension, domain size in units of pi, and the three constants."""

    n: int = field(default=1, converter=_integer("n"), validator=_at_least(1))
    R_coef: Fraction = field(default=Fraction(1, 2), converter=_rational("R_coef"), validator=_positive)
    T_coef: Fraction = field(default=Fraction(2), converter=_rational("T_coef"), validator=_positive)
    mu: float = field(default=1.5, validator=[_finite, _positive])
    beta: float = field(default=6.0, validator=[_finite, _positive])
    eta: float = field(default=0.5, validator=[_finite, _positive])


@define(frozen=True)
class NonlinearitySection:
    """Which nonlinearity to use, by registry id, plus its parameters."""

    id: str = "arctan"
    params: dict[str, float] = field(factory=dict)


@define(frozen=True)
class TruncationSection:
    """Mode box and quadrature grid sizes."""

    j_max: int = field(default=12, converter=_integer("j_max"), validator=_at_least(1))
    k_max: int = field(default=24, converter=_integer("k_max"), validator=_at_least(0))
    nt: int = field(default=128, converter=_integer("nt"), validator=_at_least(2))
    nr: int = field(default=96, converter=_integer("nr"), validator=_at_least(2))

    def scaled(self, factor: float) -> "TruncationSection":
        """Multiply every size by ``factor`` (rounded up, nt kept even)."""
        nt = math.ceil(self.nt * factor)
        return TruncationSection(
            j_max=math.ceil(self.j_max * factor),
            k_max=math.ceil(self.k_max * factor),
            nt=nt + (nt % 2),
            nr=math.ceil(self.nr * factor),
        )


@define(frozen=True)
class ToleranceSection:
    """Solver tolerances; inner accuracy must dominate the outer one."""

    tol_inner: float = field(default=1e-9, validator=_positive)
    tol_outer: float = field(default=1e-6, validator=_positive)
    delta_min: float = field(default=1e-6, validator=_positive)
    tol_scan: float = field(default=1e-6, validator=_positive)
    distinct: float = field(default=1e-3, validator=_positive)


@define(frozen=True)
class SearchSection:
    """Budgets, seeds and discretization sizes of the critical point searches."""

    seed: int = field(converter=_integer("seed"), validator=_at_least(0))
    starts: int = field(default=8, converter=_integer("starts"), validator=_at_least(1))
    inner_budget: int = field(default=10_000, converter=_integer("inner_budget"), validator=_at_least(1))
    outer_budget: int = field(default=400, converter=_integer("outer_budget"), validator=_at_least(1))
    path_nodes: int = field(default=64, converter=_integer("path_nodes"), validator=_at_least(3))
    path_budget: int = field(default=400, converter=_integer("path_budget"), validator=_at_least(1))
    ring_directions: int = field(default=48, converter=_integer("ring_directions"), validator=_at_least(4))
    radius_samples: int = field(default=64, converter=_integer("radius_samples"), validator=_at_least(4))
    r_max: float = field(default=60.0, validator=_positive)
    scan_points: int = field(default=401, converter=_integer("scan_points"), validator=_at_least(3))
    two_sided: bool = True


_SECTIONS: dict[str, type] = {
    "problem": ProblemSection,
    "nonlinearity": NonlinearitySection,
    "truncation": TruncationSection,
    "tolerances": ToleranceSection,
    "search": SearchSection,
}


@define(frozen=True)
class RunConfig:
    """A full experiment: everything needed to reproduce one run."""

    problem: ProblemSection
    nonlinearity: NonlinearitySection
    truncation: TruncationSection
    tolerances: ToleranceSection
    search: SearchSection
    source: str = "<memory>"

    def with_overrides(self, *, seed: int | None = None, truncation_scale: float | None = None) -> "RunConfig":
        """Apply the command-line overrides on top of the file."""
        out = self
        if seed is not None:
            out = attrs.evolve(out, search=attrs.evolve(out.search, seed=seed))
        if truncation_scale is not None and truncation_scale != 1.0:
            if truncation_scale <= 0:
                raise ConfigError(f"--truncation-scale must be positive, got {truncation_scale}")
            out = attrs.evolve(out, truncation=out.truncation.scaled(truncation_scale))
        return out

    def problem_config(self) -> ProblemConfig:
        """Return the spectral ``ProblemConfig`` this run describes."""
        p, t = self.problem, self.truncation
        return ProblemConfig(
            n=p.n,
            R_coef=p.R_coef,
            T_coef=p.T_coef,
            mu=p.mu,
            beta=p.beta,
            eta=p.eta,
            j_max=t.j_max,
            k_max=t.k_max,
            delta_min=self.tolerances.delta_min,
        )


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

_converter = cattrs.Converter(forbid_extra_keys=True, detailed_validation=False)
_converter.register_structure_hook(Fraction, lambda value, _: value)
# Integers are checked by the field converters; the default hook would truncate 1.5 to 1.
_converter.register_structure_hook(int, lambda value, _: value)

_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_]+)\s*\]")
_KEY = re.compile(r"^\s*([A-Za-z0-9_]+)\s*=")


def _locate(text: str) -> tuple[dict[str, int], dict[tuple[str, str], int]]:
    """Map section headers and ``section.key`` pairs to 1-based line numbers."""
    headers: dict[str, int] = {}
    keys: dict[tuple[str, str], int] = {}
    section = ""
    for number, line in enumerate(text.splitlines(), start=1):
        if m := _HEADER.match(line):
            section = m.group(1)
            headers.setdefault(section, number)
        elif (m := _KEY.match(line)) and section:
            keys.setdefault((section, m.group(1)), number)
    return headers, keys


def _structure_section(name: str, raw: dict[str, Any], source: str, headers: dict[str, int], keys: dict[tuple[str, str], int]) -> Any:  # noqa: ANN401
    cls = _SECTIONS[name]
    known = {a.name for a in attrs.fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in [{name}]", source=source, line=keys.get((name, key), headers.get(name)))
    for a in attrs.fields(cls):
        if a.default is attrs.NOTHING and a.name not in raw:
            raise ConfigError(f"missing mandatory key '{a.name}' in [{name}]", source=source, line=headers.get(name))
    try:
        return _converter.structure(raw, cls)
    except FieldProblem as exc:
        raise ConfigError(str(exc), source=source, line=keys.get((name, exc.name), headers.get(name))) from exc
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"[{name}] {exc}", source=source, line=headers.get(name)) from exc


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse, validate and structure a TOML run configuration.

    Raises:
        ConfigError: with the line number of the offending key.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None and (m := re.search(r"line (\d+)", str(exc))):
            line = int(m.group(1))
        raise ConfigError(f"syntax error: {exc}", source=source, line=line) from exc

    headers, keys = _locate(text)
    for name in data:
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", source=source, line=headers.get(name))
    if "search" not in data:
        raise ConfigError("missing [search] section (search.seed is mandatory)", source=source)

    sections = {name: _structure_section(name, data.get(name, {}), source, headers, keys) for name in _SECTIONS}
    config = RunConfig(source=source, **sections)

    tol = config.tolerances
    if tol.tol_inner > tol.tol_outer:
        raise ConfigError("tol_inner must not exceed tol_outer", source=source, line=keys.get(("tolerances", "tol_inner"), headers.get("tolerances")))
    return config


def load_config(path: Path) -> RunConfig:
    """Read a run configuration file from disk."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from exc
    return parse_config(text, source=str(path))
