# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Energy functional Phi(u) = 1/2 <(L - mu) u, u> - int F(t, r, u) rho dt dr.

The nonlinear term is evaluated pseudo-spectrally: synthesize on the grid,
apply f pointwise, analyze back to coefficients.
"""

import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from typing import Any, ClassVar

import numpy as np
from attrs import define, field
from numpy.typing import NDArray

from wavecraft.errors import ConfigError, ValidationError
from wavecraft.spectral.space import Basis, CoefficientField, GridSampling, basis_for
from wavecraft.spectral.spectrum import ProblemConfig, SpectralConstants

Array = NDArray[np.float64]


class Nonlinearity(ABC):
    """Contract for f(t, r, u): f(.,.,0) = 0, f_u(.,.,0) = 0, 0 <= f_u <= mu0 - eta, |f - beta u| <= C_f.

    Every method broadcasts over (t, r, u).
    """

    name: ClassVar[str]

    beta: float
    eta: float

    @property
    @abstractmethod
    def defect_bound(self) -> float:
        """C_f with |f(t, r, u) - beta u| <= C_f."""

    @property
    @abstractmethod
    def lipschitz(self) -> float:
        """sup f_u over all arguments."""

    @property
    @abstractmethod
    def growth(self) -> float:
        """Exponent p > 1 with |f(u)| <= eps |u| + C |u|^p near zero."""

    @property
    def autonomous(self) -> bool:
        """True when f does not depend on (t, r)."""
        return True

    @abstractmethod
    def f(self, t: Array, r: Array, u: Array) -> Array:
        """Nonlinearity."""

    @abstractmethod
    def df_du(self, t: Array, r: Array, u: Array) -> Array:
        """Derivative in u."""

    @abstractmethod
    def F(self, t: Array, r: Array, u: Array) -> Array:
        """Primitive in u with F(., ., 0) = 0."""


@define(frozen=True)
class ArctanNonlinearity(Nonlinearity):
    """Reference instance f(u) = beta (u - arctan u)."""

    name: ClassVar[str] = "arctan"

    beta: float
    eta: float

    @property
    def defect_bound(self) -> float:
        """|beta arctan u| < beta pi / 2."""
        return self.beta * math.pi / 2

    @property
    def lipschitz(self) -> float:
        """beta, approached as |u| grows."""
        return self.beta

    @property
    def growth(self) -> float:
        """f ~ beta u^3 / 3 at the origin."""
        return 3.0

    def f(self, t: Array, r: Array, u: Array) -> Array:
        """beta (u - arctan u)."""
        return self.beta * (u - np.arctan(u))

    def df_du(self, t: Array, r: Array, u: Array) -> Array:
        """beta u^2 / (1 + u^2)."""
        u2 = u * u
        return self.beta * u2 / (1.0 + u2)

    def F(self, t: Array, r: Array, u: Array) -> Array:
        """beta (u^2 / 2 - u arctan u + log(1 + u^2) / 2)."""
        return self.beta * (0.5 * u * u - u * np.arctan(u) + 0.5 * np.log1p(u * u))


@define(frozen=True)
class ZeroNonlinearity(Nonlinearity):
    """f = 0; test instance with a purely quadratic functional."""

    name: ClassVar[str] = "zero"

    beta: float = 0.0
    eta: float = 0.0

    @property
    def defect_bound(self) -> float:
        """No defect."""
        return 0.0

    @property
    def lipschitz(self) -> float:
        """Flat."""
        return 0.0

    @property
    def growth(self) -> float:
        """Nominal; unused by the quadratic landscape."""
        return 2.0

    def f(self, t: Array, r: Array, u: Array) -> Array:
        """Zero."""
        return np.zeros_like(u)

    def df_du(self, t: Array, r: Array, u: Array) -> Array:
        """Zero."""
        return np.zeros_like(u)

    def F(self, t: Array, r: Array, u: Array) -> Array:
        """Zero."""
        return np.zeros_like(u)


@define(frozen=True)
class LinearNonlinearity(Nonlinearity):
    """f = c u with 0 <= c; test instance whose reduction has a closed form."""

    name: ClassVar[str] = "linear"

    c: float = field()
    eta: float = 0.0

    @c.validator
    def _check_c(self, attribute: object, value: float) -> None:
        if value < 0:
            raise ConfigError(f"linear nonlinearity needs c >= 0, got {value}")

    @property
    def beta(self) -> float:
        """Asymptotic slope is c itself."""
        return self.c

    @property
    def defect_bound(self) -> float:
        """f - c u vanishes identically."""
        return 0.0

    @property
    def lipschitz(self) -> float:
        """Slope c."""
        return self.c

    @property
    def growth(self) -> float:
        """Linear."""
        return 1.0

    def f(self, t: Array, r: Array, u: Array) -> Array:
        """c u."""
        return self.c * u

    def df_du(self, t: Array, r: Array, u: Array) -> Array:
        """c."""
        return np.full_like(u, self.c)

    def F(self, t: Array, r: Array, u: Array) -> Array:
        """c u^2 / 2."""
        return 0.5 * self.c * u * u


_REGISTRY: dict[str, Callable[[ProblemConfig, dict[str, float]], Nonlinearity]] = {
    "arctan": lambda cfg, p: ArctanNonlinearity(beta=float(p.get("beta", cfg.beta)), eta=cfg.eta),
    "zero": lambda cfg, p: ZeroNonlinearity(),
    "linear": lambda cfg, p: LinearNonlinearity(c=float(p["c"]), eta=cfg.eta),
}
_PARAMS: dict[str, set[str]] = {"arctan": {"beta"}, "zero": set(), "linear": {"c"}}
_REQUIRED: dict[str, set[str]] = {"arctan": set(), "zero": set(), "linear": {"c"}}


def available_nonlinearities() -> list[str]:
    """Registered ids."""
    return sorted(_REGISTRY)


def build_nonlinearity(nl_id: str, params: dict[str, Any], config: ProblemConfig) -> Nonlinearity:
    """Instantiate a registered nonlinearity.

    Raises:
        ConfigError: for an unknown id or unknown / missing parameters.
    """
    if nl_id not in _REGISTRY:
        raise ConfigError(f"unknown nonlinearity id '{nl_id}' (known: {', '.join(available_nonlinearities())})")
    extra = set(params) - _PARAMS[nl_id]
    if extra:
        raise ConfigError(f"nonlinearity '{nl_id}' does not take parameters {sorted(extra)}")
    missing = _REQUIRED[nl_id] - set(params)
    if missing:
        raise ConfigError(f"nonlinearity '{nl_id}' needs parameters {sorted(missing)}")
    return _REGISTRY[nl_id](config, params)


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------


_REQUIRED_CHECKS = ("small_u", "monotone", "slope_bound", "defect_bounded", "primitive")


@define(frozen=True)
class NonlinearityAudit:
    """Sampled checks of the nonlinearity contract; ``ok`` covers the required ones."""

    checks: dict[str, bool]
    worst: dict[str, float]
    ok: bool

    def require(self) -> "NonlinearityAudit":
        """Return self, or raise when a required check failed.

        Raises:
            ValidationError: naming the failed checks; the reduction needs 0 <= f_u <= mu0 - eta.
        """
        failed = [name for name in _REQUIRED_CHECKS if not self.checks[name]]
        if failed:
            worst = self.worst
            raise ValidationError(f"nonlinearity violates {', '.join(failed)} (df_max = {worst['df_max']:.6g}, mu0 - eta = {worst['slope_margin']:.6g})")
        return self


def _audit_lattice(config: ProblemConfig) -> tuple[Array, Array, Array]:
    mags = np.geomspace(1e-3, 1e3, 41)
    u = np.concatenate([-mags[::-1], [0.0], mags])
    t = np.linspace(0.0, config.T, 7)
    r = np.linspace(0.0, config.R, 5)
    return np.meshgrid(t, r, u, indexing="ij")


def audit_nonlinearity(nl: Nonlinearity, constants: SpectralConstants, config: ProblemConfig) -> NonlinearityAudit:
    """Check f(0) = f_u(0) = 0, 0 <= f_u <= mu0 - eta, the defect bound, F' = f and oddness on a sample lattice."""
    t, r, u = _audit_lattice(config)
    zero = np.zeros_like(t[..., :1])
    f0 = float(np.max(np.abs(nl.f(t[..., :1], r[..., :1], zero))))
    df0 = float(np.max(np.abs(nl.df_du(t[..., :1], r[..., :1], zero))))
    big_f0 = float(np.max(np.abs(nl.F(t[..., :1], r[..., :1], zero))))
    df = nl.df_du(t, r, u)
    margin = constants.mu0 - config.eta
    defect = float(np.max(np.abs(nl.f(t, r, u) - nl.beta * u)))

    h = 1e-5 * np.maximum(1.0, np.abs(u))
    fd = (nl.F(t, r, u + h) - nl.F(t, r, u - h)) / (2 * h)
    exact = nl.f(t, r, u)
    primitive = float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))))
    oddness = float(np.max(np.abs(nl.f(t, r, -u) + nl.f(t, r, u))))

    worst = {
        "f_at_zero": f0,
        "df_at_zero": df0,
        "F_at_zero": big_f0,
        "df_min": float(df.min()),
        "df_max": float(df.max()),
        "lipschitz": nl.lipschitz,
        "slope_margin": margin,
        "defect": defect,
        "defect_bound": nl.defect_bound,
        "primitive_error": primitive,
        "oddness": oddness,
    }
    checks = {
        "small_u": f0 <= 1e-12 and df0 <= 1e-12 and big_f0 <= 1e-12,
        "monotone": worst["df_min"] >= 0.0,
        "slope_bound": worst["df_max"] <= margin and nl.lipschitz <= margin + 1e-12,
        "defect_bounded": defect <= nl.defect_bound + 1e-9,
        "primitive": primitive <= 1e-6,
        "odd": oddness <= 1e-12,
    }
    return NonlinearityAudit(checks=checks, worst=worst, ok=all(checks[name] for name in _REQUIRED_CHECKS))


# ---------------------------------------------------------------------------
# Functional
# ---------------------------------------------------------------------------


class EnergyFunctional:
    """Phi and its derivatives on raw coefficient arrays of one basis; leading batch axes allowed."""

    def __init__(self, basis: Basis, nl: Nonlinearity) -> None:
        """Bind the functional to a basis and a nonlinearity."""
        self.basis = basis
        self.nl = nl
        self._t = basis.grid.t[:, None]
        self._r = basis.grid.r[None, :]

    def values(self, c: Array) -> Array:
        """Grid values of the fields ``c``."""
        return self.basis.synthesize(c)

    def energy(self, c: Array, u: Array | None = None) -> Array | float:
        """Phi(c)."""
        u = self.values(c) if u is None else u
        quad = 0.5 * np.sum(self.basis.shift * c * c, axis=-1)
        return quad - self.basis.grid.integrate(self.nl.F(self._t, self._r, u))

    def gradient(self, c: Array, u: Array | None = None) -> Array:
        """L2-represented gradient (lambda - mu) c - analyze(f(u))."""
        u = self.values(c) if u is None else u
        return self.basis.shift * c - self.basis.analyze(self.nl.f(self._t, self._r, u))

    def energy_and_gradient(self, c: Array) -> tuple[Array | float, Array]:
        """Both with one synthesis."""
        u = self.values(c)
        return self.energy(c, u), self.gradient(c, u)

    def nonlinear_coefficients(self, c: Array) -> Array:
        """analyze(f(u)) alone."""
        return self.basis.analyze(self.nl.f(self._t, self._r, self.values(c)))

    def max_slope_values(self, u: Array) -> Array | float:
        """Largest f_u over the grid, given grid values ``u``."""
        return np.max(self.nl.df_du(self._t, self._r, u), axis=(-2, -1))

    def hessian(self, c: Array, v: Array) -> Array | float:
        """<Phi''(c) v, v>."""
        u = self.values(c)
        w = self.values(v)
        quad = np.sum(self.basis.shift * v * v, axis=-1)
        return quad - self.basis.grid.integrate(self.nl.df_du(self._t, self._r, u) * w * w)


def _functional(u: CoefficientField, nl: Nonlinearity, grid: GridSampling) -> EnergyFunctional:
    basis = u.basis if u.basis.grid is grid else basis_for(u.basis.table, grid)
    return EnergyFunctional(basis, nl)


def phi(u: CoefficientField, nl: Nonlinearity, grid: GridSampling) -> float:
    """Phi(u) = 1/2 sum (lambda - mu) a_m^2 - int F(u) rho."""
    return float(_functional(u, nl, grid).energy(u.coeffs))


def phi_grad(u: CoefficientField, nl: Nonlinearity, grid: GridSampling) -> CoefficientField:
    """Gradient of Phi against the L2 pairing, in basis coefficients."""
    func = _functional(u, nl, grid)
    return CoefficientField(func.basis, func.gradient(u.coeffs))


def hessian_form(u: CoefficientField, v: CoefficientField, nl: Nonlinearity, grid: GridSampling) -> float:
    """<Phi''(u) v, v> = sum (lambda - mu) v_m^2 - int f_u(u) v^2 rho."""
    return float(_functional(u, nl, grid).hessian(u.coeffs, v.coeffs))
