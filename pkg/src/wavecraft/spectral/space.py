# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Truncated working space: real eigenbasis, quadrature grids and coefficient fields.

A real mode is ``(j, k, parity)`` with ``parity`` cos or sin and no sin mode for
k = 0. Coefficients are stored j-major: index ``(j - 1) * Q + q`` where
``Q = 2 k_max + 1`` and the temporal slot ``q`` is 0 for k = 0, ``2k - 1`` for
cos and ``2k`` for sin. This keeps synthesis separable:

    u(t, r) = Time[t, q] @ C[q, j] @ Radial[j, r]
"""

import functools
import math
from enum import StrEnum
from typing import Literal

import numpy as np
from attrs import define, field
from numpy.typing import ArrayLike, NDArray
from scipy import special

from wavecraft.errors import DomainError, ResolutionError
from wavecraft.spectral.bessel import scaled_radial
from wavecraft.spectral.spectrum import ProblemConfig, SpectrumTable, Subspace


class Parity(StrEnum):
    """Temporal factor of a real mode."""

    COS = "cos"
    SIN = "sin"


@define(frozen=True)
class Mode:
    """Index of one real basis function."""

    j: int
    k: int
    parity: Parity = Parity.COS

    def __attrs_post_init__(self) -> None:
        """Reject the nonexistent sin mode at k = 0."""
        if self.j < 1 or self.k < 0:
            raise DomainError(f"invalid mode index {self}")
        if self.k == 0 and self.parity == Parity.SIN:
            raise DomainError("there is no sin mode for k = 0")

    @property
    def slot(self) -> int:
        """Temporal slot q."""
        if self.k == 0:
            return 0
        return 2 * self.k - 1 if self.parity == Parity.COS else 2 * self.k


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@define(frozen=True, eq=False)
class GridSampling:
    """Tensor grid on [0, T] x [0, R]; radial weights already carry rho(r) = r^(n-1)."""

    kind: Literal["quadrature", "uniform"]
    n: int
    T: float
    R: float
    t: NDArray[np.float64]
    wt: NDArray[np.float64]
    r: NDArray[np.float64]
    wr: NDArray[np.float64]

    @property
    def nt(self) -> int:
        """Number of time nodes."""
        return len(self.t)

    @property
    def nr(self) -> int:
        """Number of radial nodes."""
        return len(self.r)

    @property
    def rho(self) -> NDArray[np.float64]:
        """The weight r^(n-1) at the radial nodes."""
        return self.r ** (self.n - 1)

    @property
    def weights(self) -> NDArray[np.float64]:
        """(nt, nr) weights of the double integral against rho dt dr."""
        return np.outer(self.wt, self.wr)

    def integrate(self, values: NDArray[np.float64]) -> NDArray[np.float64] | float:
        """Weighted double integral of grid values; leading batch axes are kept."""
        out = np.einsum("...tr,t,r->...", values, self.wt, self.wr)
        return float(out) if np.ndim(out) == 0 else out

    @classmethod
    def quadrature(cls, config: ProblemConfig, nt: int, nr: int) -> "GridSampling":
        """Periodic trapezoid rule in t and Gauss-Legendre on [0, R] with rho folded in."""
        if nt < 2 or nr < 2:
            raise ResolutionError(f"grid needs at least 2 nodes per axis, got nt={nt}, nr={nr}")
        T, R = config.T, config.R
        x, w = np.polynomial.legendre.leggauss(nr)
        r = 0.5 * R * (x + 1.0)
        return cls(
            kind="quadrature",
            n=config.n,
            T=T,
            R=R,
            t=T * np.arange(nt) / nt,
            wt=np.full(nt, T / nt),
            r=r,
            wr=0.5 * R * w * r ** (config.n - 1),
        )

    @classmethod
    def uniform(cls, config: ProblemConfig, nt: int, nr: int) -> "GridSampling":
        """Uniform output grid including t = T and r = R, with trapezoid weights."""
        if nt < 2 or nr < 2:
            raise ResolutionError(f"grid needs at least 2 nodes per axis, got nt={nt}, nr={nr}")
        T, R = config.T, config.R
        t = np.linspace(0.0, T, nt)
        r = np.linspace(0.0, R, nr)
        wt = np.full(nt, T / (nt - 1))
        wt[[0, -1]] *= 0.5
        wr = np.full(nr, R / (nr - 1))
        wr[[0, -1]] *= 0.5
        return cls(kind="uniform", n=config.n, T=T, R=R, t=t, wt=wt, r=r, wr=wr * r ** (config.n - 1))


def min_radial_nodes(table: SpectrumTable) -> int:
    """Smallest radial rule resolving the truncation: gamma_{j_max} / pi + 10."""
    return math.ceil(table.zeros.gamma(table.config.j_max) / math.pi + 10)


# ---------------------------------------------------------------------------
# Basis
# ---------------------------------------------------------------------------


def _time_matrix(T: float, k_max: int, t: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.empty((len(t), 2 * k_max + 1))
    out[:, 0] = 1.0 / math.sqrt(T)
    amp = math.sqrt(2.0 / T)
    for k in range(1, k_max + 1):
        phase = 2.0 * math.pi * k * t / T
        out[:, 2 * k - 1] = amp * np.cos(phase)
        out[:, 2 * k] = amp * np.sin(phase)
    return out


def _radial_matrix(table: SpectrumTable, r: NDArray[np.float64]) -> NDArray[np.float64]:
    config = table.config
    nu = config.order
    R = config.R
    gammas = table.zeros.zeros[: config.j_max]
    norm = math.sqrt(2.0) / (R * special.jv(nu.nu + 1.0, gammas))
    out = np.empty((len(r), config.j_max))
    for col, g in enumerate(gammas):
        out[:, col] = norm[col] * (g / R) ** nu.nu * scaled_radial(nu, g * r / R)
    return out


class Basis:
    """Real eigenbasis of one spectrum table sampled on one grid.

    Synthesis and analysis are separable matrix products and accept any number
    of leading batch axes.
    """

    def __init__(self, table: SpectrumTable, grid: GridSampling) -> None:
        """Tabulate the temporal and radial factors on the grid."""
        config = table.config
        if grid.kind == "quadrature":
            if grid.nt <= 2 * config.k_max:
                raise ResolutionError(f"nt = {grid.nt} must exceed 2 * k_max = {2 * config.k_max}")
            need = min_radial_nodes(table)
            if grid.nr < need:
                raise ResolutionError(f"nr = {grid.nr} is below gamma_jmax / pi + 10 = {need}")

        self.table = table
        self.grid = grid
        self.J = config.j_max
        self.Q = 2 * config.k_max + 1
        self.size = self.J * self.Q

        self.time = _time_matrix(grid.T, config.k_max, grid.t)
        self.radial = _radial_matrix(table, grid.r)
        self._time_w = grid.wt[:, None] * self.time
        self._radial_w = grid.wr[:, None] * self.radial

        q = np.arange(self.Q)
        slot_k = (q + 1) // 2
        slot_sin = (q > 0) & (q % 2 == 0)
        self.mode_j = np.repeat(np.arange(1, self.J + 1), self.Q)
        self.mode_k = np.tile(slot_k, self.J)
        self.mode_sin = np.tile(slot_sin, self.J)
        self.row = (self.mode_j - 1) * (config.k_max + 1) + self.mode_k

        self.lam = table.lam[self.row]
        self.shift = self.lam - config.mu
        self.e_weights = np.abs(self.shift)
        self.label = table.label[self.row]
        self.resonant = table.resonant[self.row]

    def index(self, mode: Mode) -> int:
        """Coefficient index of a real mode."""
        if mode.j > self.J or mode.k > self.table.config.k_max:
            raise DomainError(f"{mode} lies outside the truncation box")
        return (mode.j - 1) * self.Q + mode.slot

    def mode(self, index: int) -> Mode:
        """Real mode stored at a coefficient index."""
        return Mode(int(self.mode_j[index]), int(self.mode_k[index]), Parity.SIN if self.mode_sin[index] else Parity.COS)

    def mask(self, label: str) -> NDArray[np.bool_]:
        """Coefficient mask of a subspace label, E0 (resonant) or the complement E1+E3."""
        if label in {"E1+E3", "E1⊕E3", "E13"}:
            return (self.label == Subspace.E1.value) | (self.label == Subspace.E3.value)
        if label == Subspace.E0:
            return self.resonant.copy()
        if label not in {s.value for s in Subspace}:
            raise DomainError(f"unknown subspace label {label!r}")
        return self.label == str(label)

    def synthesize(self, coeffs: NDArray[np.float64]) -> NDArray[np.float64]:
        """(..., M) coefficients -> (..., nt, nr) grid values."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        lead = coeffs.shape[:-1]
        batch = math.prod(lead)
        nt, nr = self.grid.nt, self.grid.nr
        # Two flat GEMMs: contract q against time, then j against radius.
        by_time = (coeffs.reshape(batch * self.J, self.Q) @ self.time.T).reshape(batch, self.J, nt)
        values = np.swapaxes(by_time, 1, 2).reshape(batch * nt, self.J) @ self.radial.T
        return values.reshape(*lead, nt, nr)

    def analyze(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        """(..., nt, nr) grid values -> (..., M) coefficients; the quadrature adjoint of synthesize."""
        values = np.asarray(values, dtype=np.float64)
        lead = values.shape[:-2]
        batch = math.prod(lead)
        nt = self.grid.nt
        by_radius = (values.reshape(batch * nt, self.grid.nr) @ self._radial_w).reshape(batch, nt, self.J)
        coeffs = np.swapaxes(by_radius, 1, 2).reshape(batch * self.J, nt) @ self._time_w
        return coeffs.reshape(*lead, self.size)

    def time_shift(self, coeffs: NDArray[np.float64], tau: float) -> NDArray[np.float64]:
        """Coefficients of u(t + tau, r); each (cos, sin) pair of frequency k turns by 2 pi k tau / T."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        cos_idx = np.flatnonzero((self.mode_k > 0) & ~self.mode_sin)
        angle = (2.0 * math.pi * tau / self.grid.T) * self.mode_k[cos_idx]
        a, b = coeffs[..., cos_idx], coeffs[..., cos_idx + 1]
        out = coeffs.copy()
        out[..., cos_idx] = a * np.cos(angle) + b * np.sin(angle)
        out[..., cos_idx + 1] = b * np.cos(angle) - a * np.sin(angle)
        return out

    def time_reversal(self, coeffs: NDArray[np.float64]) -> NDArray[np.float64]:
        """Coefficients of u(-t, r)."""
        return np.where(self.mode_sin, -1.0, 1.0) * np.asarray(coeffs, dtype=np.float64)

    def zeros(self) -> "CoefficientField":
        """The zero field."""
        return CoefficientField(self, np.zeros(self.size))

    def unit(self, mode: Mode, amplitude: float = 1.0) -> "CoefficientField":
        """A single mode scaled by ``amplitude``."""
        c = np.zeros(self.size)
        c[self.index(mode)] = amplitude
        return CoefficientField(self, c)


@functools.lru_cache(maxsize=16)
def basis_for(table: SpectrumTable, grid: GridSampling) -> Basis:
    """Cached basis of ``table`` on ``grid`` (both compared by identity)."""
    return Basis(table, grid)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@define(frozen=True, eq=False)
class CoefficientField:
    """A real coefficient vector over the truncated eigenbasis."""

    basis: Basis
    coeffs: NDArray[np.float64] = field(converter=lambda c: np.asarray(c, dtype=np.float64))

    def __attrs_post_init__(self) -> None:
        """Check the vector length against the basis."""
        if self.coeffs.shape != (self.basis.size,):
            raise DomainError(f"expected {self.basis.size} coefficients, got shape {self.coeffs.shape}")

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        """Sum of two fields on the same basis."""
        return CoefficientField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "CoefficientField") -> "CoefficientField":
        """Difference of two fields on the same basis."""
        return CoefficientField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scale: float) -> "CoefficientField":
        """Scalar multiple."""
        return CoefficientField(self.basis, scale * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "CoefficientField":
        """Negated field."""
        return CoefficientField(self.basis, -self.coeffs)

    def dot(self, other: "CoefficientField") -> float:
        """L2(Omega, rho) inner product (Parseval)."""
        return float(self.coeffs @ other.coeffs)

    def e_dot(self, other: "CoefficientField") -> float:
        """E inner product sum |lambda - mu| a_m b_m."""
        return float(np.sum(self.basis.e_weights * self.coeffs * other.coeffs))

    def quadratic(self) -> float:
        """<(L - mu) u, u> = sum (lambda - mu) a_m^2."""
        return float(np.sum(self.basis.shift * self.coeffs**2))

    @property
    def e_norm(self) -> float:
        """sqrt(sum |lambda - mu| a_m^2)."""
        return math.sqrt(float(np.sum(self.basis.e_weights * self.coeffs**2)))

    @property
    def l2_norm(self) -> float:
        """sqrt(sum a_m^2)."""
        return float(np.linalg.norm(self.coeffs))

    def dual_norm(self) -> float:
        """E-dual norm sqrt(sum g_m^2 / |lambda - mu|) of an L2-represented gradient."""
        return math.sqrt(float(np.sum(self.coeffs**2 / self.basis.e_weights)))

    def support(self, label: str) -> bool:
        """True when every coefficient outside ``label`` is zero."""
        return not np.any(self.coeffs[~self.basis.mask(label)])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def eigenfunction_value(table: SpectrumTable, mode: Mode, t: ArrayLike, r: ArrayLike) -> NDArray[np.float64] | float:
    """Value of the normalized real eigenfunction psi_{j,k,parity} at (t, r).

    Raises:
        DomainError: outside [0, T] x [0, R] or outside the truncation.
    """
    config = table.config
    T, R = config.T, config.R
    tt, rr = np.broadcast_arrays(np.asarray(t, dtype=np.float64), np.asarray(r, dtype=np.float64))
    if np.any((tt < 0) | (tt > T)) or np.any((rr < 0) | (rr > R)):
        raise DomainError("eigenfunctions are only evaluated on [0, T] x [0, R]")
    if mode.j > config.j_max:
        raise DomainError(f"{mode} lies outside the truncation box")

    nu = config.order
    g = table.zeros.gamma(mode.j)
    radial = math.sqrt(2.0) / (R * special.jv(nu.nu + 1.0, g)) * (g / R) ** nu.nu * scaled_radial(nu, g * rr / R)
    if mode.k == 0:
        temporal = np.full_like(tt, 1.0 / math.sqrt(T))
    else:
        trig = np.cos if mode.parity == Parity.COS else np.sin
        temporal = math.sqrt(2.0 / T) * trig(2.0 * math.pi * mode.k * tt / T)
    out = temporal * radial
    return float(out) if out.ndim == 0 else out


def synthesize(u: CoefficientField, grid: GridSampling) -> NDArray[np.float64]:
    """Point values of ``u`` on ``grid``, shape (nt, nr)."""
    basis = u.basis if u.basis.grid is grid else basis_for(u.basis.table, grid)
    return basis.synthesize(u.coeffs)


def analyze(values: NDArray[np.float64], grid: GridSampling, table: SpectrumTable) -> CoefficientField:
    """Coefficients of grid ``values`` by weighted quadrature against every mode."""
    basis = basis_for(table, grid)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.nt, grid.nr):
        raise ResolutionError(f"values have shape {values.shape}, grid is {(grid.nt, grid.nr)}")
    return CoefficientField(basis, basis.analyze(values))


def project(u: CoefficientField, label: str) -> CoefficientField:
    """Zero every coefficient outside the subspace ``label`` (E0, E1, E2, E3 or E1+E3)."""
    return CoefficientField(u.basis, np.where(u.basis.mask(label), u.coeffs, 0.0))


@define(frozen=True)
class Norms:
    """E, L2 and quadrature L1 norms of one field."""

    e_norm: float
    l2_norm: float
    l1_norm: float


def norms(u: CoefficientField) -> Norms:
    """E and L2 norms by Parseval, L1 by quadrature of |u| on the field's grid."""
    grid = u.basis.grid
    return Norms(e_norm=u.e_norm, l2_norm=u.l2_norm, l1_norm=float(grid.integrate(np.abs(u.basis.synthesize(u.coeffs)))))


def gram_matrix(basis: Basis) -> NDArray[np.float64]:
    """Quadrature Gram matrix of all truncated real modes."""
    gram_t = basis.time.T @ (basis.grid.wt[:, None] * basis.time)
    gram_r = basis.radial.T @ (basis.grid.wr[:, None] * basis.radial)
    return np.kron(gram_r, gram_t)


def gram_audit(basis: Basis) -> float:
    """Largest entrywise deviation of the Gram matrix from the identity."""
    return float(np.max(np.abs(gram_matrix(basis) - np.eye(basis.size))))


def embed(u: CoefficientField, target: Basis) -> CoefficientField:
    """Copy ``u`` into a larger truncation; modes missing from ``target`` are rejected."""
    src = u.basis
    if src.J > target.J or src.Q > target.Q:
        raise DomainError("target truncation must contain the source truncation")
    out = np.zeros(target.size)
    out[(src.mode_j - 1) * target.Q + np.arange(src.size) % src.Q] = u.coeffs
    return CoefficientField(target, out)


def sample_values(u: CoefficientField, nt: int, nr: int) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Evaluate ``u`` on a uniform (nt, nr) grid that includes t = T and r = R."""
    grid = GridSampling.uniform(u.basis.table.config, nt, nr)
    basis = Basis(u.basis.table, grid)
    return grid.t, grid.r, basis.synthesize(u.coeffs)
