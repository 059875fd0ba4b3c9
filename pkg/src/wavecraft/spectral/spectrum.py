# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Spectrum of the periodic-Dirichlet wave operator on the radial domain.

Eigenvalues are lambda_jk = (gamma_j / R)^2 - (2 k pi / T)^2 with gamma_j the
j-th positive zero of J_nu. Resonance of an index pair is decided exactly on
rationals: with 8R/T = a/b in lowest terms, beta_j - tau_k equals
D_jk * pi / 4b for the integer D_jk = b (4j + n - 3) - a k.
"""

import math
from enum import StrEnum
from fractions import Fraction

import attrs
import numpy as np
from attrs import define, field
from numpy.typing import NDArray

from wavecraft.errors import AuditError, ValidationError
from wavecraft.spectral.bessel import BesselOrder, BesselZeroTable, zeros
from wavecraft.utils.logger import logger

_AUDIT_BLOCK_ROWS = 512
_AUDIT_STRIP = 64


class Subspace(StrEnum):
    """Labels of the splitting E = E1 + E2 + E3, plus the resonant set E0."""

    E0 = "E0"
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"


def _positive(instance: object, attribute: attrs.Attribute, value: float) -> None:
    if not value > 0:
        raise ValidationError(f"{attribute.name} must be positive, got {value}")


@define(frozen=True)
class ProblemConfig:
    """One experiment: geometry, constants and the truncation box.

    ``R = R_coef * pi`` and ``T = T_coef * pi`` with exact rational coefficients.
    """

    n: int = field()
    R_coef: Fraction = field(converter=Fraction, validator=_positive)
    T_coef: Fraction = field(converter=Fraction, validator=_positive)
    mu: float = field(validator=_positive)
    beta: float = field(validator=_positive)
    eta: float = field(validator=_positive)
    j_max: int = 12
    k_max: int = 24
    delta_min: float = 1e-6

    @n.validator
    def _check_n(self, attribute: attrs.Attribute, value: int) -> None:
        if value < 1:
            raise ValidationError(f"n must be >= 1, got {value}")

    @property
    def R(self) -> float:
        """Ball radius."""
        return float(self.R_coef) * math.pi

    @property
    def T(self) -> float:
        """Time period."""
        return float(self.T_coef) * math.pi

    @property
    def order(self) -> BesselOrder:
        """Bessel order nu = (n - 2) / 2."""
        return BesselOrder.from_dimension(self.n)

    @property
    def ratio(self) -> Fraction:
        """The exact rational 8R/T."""
        return 8 * self.R_coef / self.T_coef

    def with_box(self, j_max: int, k_max: int) -> "ProblemConfig":
        """Same problem on another truncation box."""
        return attrs.evolve(self, j_max=j_max, k_max=k_max)


@define(frozen=True)
class ArithmeticProfile:
    """Exact data deciding which index pairs are resonant."""

    n: int
    R_coef: Fraction
    T_coef: Fraction
    a: int
    b: int
    gcd4a: int
    resonant_case: bool
    lambda0: float

    def beta_j(self, j: int) -> Fraction:
        """(4j + n - 3) / 4, in units of pi."""
        return Fraction(4 * j + self.n - 3, 4)

    def tau_k(self, k: int) -> Fraction:
        """2 |k| R / T, in units of pi."""
        return 2 * abs(k) * self.R_coef / self.T_coef

    def lattice_gap(self, j: int, k: int) -> int:
        """Integer D_jk with beta_j - tau_k = D_jk / 4b (units of pi)."""
        return self.b * (4 * j + self.n - 3) - self.a * abs(k)

    def is_resonant(self, j: int, k: int) -> bool:
        """True when beta_j = tau_k exactly."""
        return self.lattice_gap(j, k) == 0


def arithmetic_profile(config: ProblemConfig) -> ArithmeticProfile:
    """Reduce 8R/T to a/b and classify the resonant case."""
    ratio = config.ratio
    a, b = ratio.numerator, ratio.denominator
    gcd4a = math.gcd(4, a)
    lambda0 = -(config.n - 3) * (config.n - 1) / (4 * config.R**2)
    return ArithmeticProfile(
        n=config.n,
        R_coef=config.R_coef,
        T_coef=config.T_coef,
        a=a,
        b=b,
        gcd4a=gcd4a,
        resonant_case=(config.n - 3) % gcd4a == 0,
        lambda0=lambda0,
    )


def resonant_pairs(profile: ArithmeticProfile, j_max: int, k_max: int) -> list[tuple[int, int]]:
    """Every resonant (j, k) with 1 <= j <= j_max and 0 <= k <= k_max, ordered by j."""
    out = []
    for j in range(1, j_max + 1):
        num = profile.b * (4 * j + profile.n - 3)
        if num % profile.a == 0 and num // profile.a <= k_max:
            out.append((j, num // profile.a))
    return out


@define(frozen=True)
class GapAuditReport:
    """Outcome of the exact gap scan over an index box."""

    j_max: int
    k_max: int
    resonant_count: int
    min_gap: Fraction | None
    min_gap_pair: tuple[int, int] | None
    bound: Fraction
    checked_pairs: int
    ok: bool


def gap_audit(profile: ArithmeticProfile, j_max: int, k_max: int) -> GapAuditReport:
    """Verify that every pair is either resonant or separated by at least pi / 4b.

    The box is scanned on the integer lattice D_jk in row blocks; a strip of
    pairs is re-derived with exact fractions to check the lattice formula itself.

    Raises:
        AuditError: if the lattice and the fractions disagree, or the dichotomy fails.
    """
    for j in range(1, min(j_max, _AUDIT_STRIP) + 1):
        for k in range(min(k_max, 4 * _AUDIT_STRIP) + 1):
            exact = profile.beta_j(j) - profile.tau_k(k)
            if exact != Fraction(profile.lattice_gap(j, k), 4 * profile.b):
                raise AuditError(f"lattice gap disagrees with exact arithmetic at (j={j}, k={k})")

    ks = np.arange(k_max + 1, dtype=np.int64)
    resonant = 0
    best: int | None = None
    best_pair: tuple[int, int] | None = None
    for start in range(1, j_max + 1, _AUDIT_BLOCK_ROWS):
        js = np.arange(start, min(start + _AUDIT_BLOCK_ROWS, j_max + 1), dtype=np.int64)
        lattice = np.abs(profile.b * (4 * js + profile.n - 3)[:, None] - profile.a * ks[None, :])
        zero = lattice == 0
        resonant += int(zero.sum())
        nonzero = np.where(zero, np.iinfo(np.int64).max, lattice)
        idx = np.unravel_index(int(np.argmin(nonzero)), nonzero.shape)
        value = int(nonzero[idx])
        if value < 1:
            raise AuditError(f"gap dichotomy fails at (j={int(js[idx[0]])}, k={int(ks[idx[1]])})")
        if not zero.all() and (best is None or value < best):
            best, best_pair = value, (int(js[idx[0]]), int(ks[idx[1]]))

    bound = Fraction(1, 4 * profile.b)
    min_gap = Fraction(best, 4 * profile.b) if best is not None else None
    logger.debug("gap audit {}x{}: {} resonant pairs, min gap {} pi", j_max, k_max + 1, resonant, min_gap)
    return GapAuditReport(
        j_max=j_max,
        k_max=k_max,
        resonant_count=resonant,
        min_gap=min_gap,
        min_gap_pair=best_pair,
        bound=bound,
        checked_pairs=j_max * (k_max + 1),
        ok=min_gap is None or min_gap >= bound,
    )


@define(frozen=True)
class SpectralConstants:
    """Constants derived from the spectrum near mu and beta."""

    delta: float
    beta_minus: float
    beta_plus: float
    mu0: float
    gamma1: float
    gamma2: float
    gamma: float
    gamma0: float
    C1: float
    eps_ring: float

    def astuple(self) -> tuple[float, float, float, float, float, float]:
        """The six headline constants (delta, beta-, beta+, mu0, gamma1, gamma2)."""
        return (self.delta, self.beta_minus, self.beta_plus, self.mu0, self.gamma1, self.gamma2)


@define(frozen=True)
class BoxGuard:
    """Whether the truncation box provably contains every eigenvalue near the window."""

    threshold: float
    j_reach: float
    k_reach: float
    ok: bool


@define(frozen=True, eq=False)
class SpectrumTable:
    """Enumerated eigenmodes, one row per (j, k >= 0); k >= 1 rows stand for a cos/sin pair."""

    config: ProblemConfig
    profile: ArithmeticProfile
    zeros: BesselZeroTable
    j: NDArray[np.int64]
    k: NDArray[np.int64]
    gamma: NDArray[np.float64]
    lam: NDArray[np.float64]
    resonant: NDArray[np.bool_]
    label: NDArray[np.str_]
    guard: BoxGuard
    constants: SpectralConstants | None = None

    def __len__(self) -> int:
        """Number of (j, k) rows."""
        return len(self.j)

    @property
    def multiplicity(self) -> NDArray[np.int64]:
        """1 for k = 0, 2 for the cos/sin pair otherwise."""
        return np.where(self.k == 0, 1, 2)

    def eigenvalue(self, j: int, k: int) -> float:
        """lambda_jk for a pair inside the box."""
        row = (j - 1) * (self.config.k_max + 1) + abs(k)
        return float(self.lam[row])

    def sigma(self) -> NDArray[np.float64]:
        """Distinct eigenvalues in the box, plus lambda0 in the resonant case."""
        values = self.lam
        if self.profile.resonant_case:
            values = np.append(values, self.profile.lambda0)
        return np.unique(values)

    def mask(self, name: str) -> NDArray[np.bool_]:
        """Row mask of a subspace label (E0 = resonant rows)."""
        if name == Subspace.E0:
            return self.resonant.copy()
        return self.label == str(name)

    def dims(self) -> dict[str, int]:
        """Real dimensions of the subspaces in the truncation, counting cos and sin separately."""
        mult = self.multiplicity
        e0 = self.resonant
        out = {str(s): int(mult[self.mask(s)].sum()) for s in Subspace}
        out["E0_E1"] = int(mult[e0 & (self.label == Subspace.E1.value)].sum())
        out["E0_E23"] = int(mult[e0 & (self.label != Subspace.E1.value)].sum())
        out["total"] = int(mult.sum())
        return out

    def rows(self) -> list[dict[str, object]]:
        """Rows of the CSV export."""
        return [
            {
                "j": int(self.j[i]),
                "k": int(self.k[i]),
                "gamma_j": float(self.gamma[i]),
                "lambda_jk": float(self.lam[i]),
                "resonant": bool(self.resonant[i]),
                "subspace": str(self.label[i]),
            }
            for i in range(len(self))
        ]


def box_guard(config: ProblemConfig, profile: ArithmeticProfile) -> BoxGuard:
    """Check that no non-resonant eigenvalue outside the box can land near mu or beta.

    Outside the box beta_j + tau_k exceeds ``threshold``, where non-resonant
    eigenvalues sit at distance more than |beta| + |mu| + 1 from lambda0.
    """
    threshold = (abs(config.beta) + abs(config.mu) + 1.0) * config.R**2 * 4 * profile.b / math.pi
    j_reach = float(profile.beta_j(config.j_max + 1)) * math.pi
    k_reach = float(profile.beta_j(1) + profile.tau_k(config.k_max + 1)) * math.pi
    return BoxGuard(threshold=threshold, j_reach=j_reach, k_reach=k_reach, ok=j_reach > threshold and k_reach > threshold)


def _radial_squares(config: ProblemConfig, table: BesselZeroTable) -> NDArray[np.float64]:
    """(gamma_j / R)^2, exact for half-integer orders where the zeros are rational multiples of pi."""
    order = config.order
    out = np.empty(len(table))
    for j in range(1, len(table) + 1):
        if order.nu == -0.5:
            out[j - 1] = float((Fraction(2 * j - 1, 2) / config.R_coef) ** 2)
        elif order.nu == 0.5:
            out[j - 1] = float((j / config.R_coef) ** 2)
        else:
            out[j - 1] = (table.gamma(j) / config.R) ** 2
    return out


def _nearest(sigma: NDArray[np.float64], x: float) -> float:
    return float(sigma[np.argmin(np.abs(sigma - x))])


def spectral_constants(table: SpectrumTable, config: ProblemConfig) -> SpectralConstants:
    """Derive delta, beta-, beta+, mu0, gamma1, gamma2 (and the secondary constants).

    Raises:
        ValidationError: when a constant is not strictly positive.
    """
    sigma = table.sigma()
    mu, beta, eta = config.mu, config.beta, config.eta
    delta = float(np.min(np.abs(sigma - mu)))
    below = sigma[sigma < beta]
    above = sigma[sigma > beta]
    if below.size == 0 or above.size == 0:
        raise ValidationError("beta must have eigenvalues on both sides inside the truncation box")
    beta_minus, beta_plus = float(below.max()), float(above.min())
    mu0 = beta_plus - mu
    gamma1 = min(1.0, beta / beta_minus - 1.0) if beta_minus > 0 else 1.0
    gamma2 = 1.0 - beta / mu0
    if gamma1 <= 0:
        raise ValidationError(f"gamma1 = {gamma1:g} is not positive")
    if gamma2 <= 0:
        raise ValidationError(f"gamma2 = {gamma2:g} is not positive (mu0 = {mu0:g} must exceed beta)")
    gamma = min(1.0, eta / mu0)
    return SpectralConstants(
        delta=delta,
        beta_minus=beta_minus,
        beta_plus=beta_plus,
        mu0=mu0,
        gamma1=gamma1,
        gamma2=gamma2,
        gamma=gamma,
        gamma0=min(gamma1, gamma2),
        C1=1.0 + beta / delta,
        eps_ring=min(delta / 4, eta / 4),
    )


def enumerate_spectrum(config: ProblemConfig, table: BesselZeroTable | None = None) -> SpectrumTable:
    """List every (j, k) in the box with its eigenvalue, resonance flag and subspace label.

    Raises:
        ValidationError: when the box is too small, mu or beta sit on the
            spectrum, (mu, beta) holds no eigenvalue, or mu >= beta+ - beta.
    """
    if table is None:
        table = zeros(config.order, config.j_max)
    if len(table) < config.j_max:
        raise ValidationError(f"zero table holds {len(table)} zeros, truncation needs {config.j_max}")

    profile = arithmetic_profile(config)
    guard = box_guard(config, profile)
    if not guard.ok:
        raise ValidationError(
            f"truncation box j_max={config.j_max}, k_max={config.k_max} is too small: "
            f"beta_j + tau_k must exceed {guard.threshold:.6g} outside the box"
        )

    radial = _radial_squares(config, table)[: config.j_max]
    temporal = np.array([float((2 * k / config.T_coef) ** 2) for k in range(config.k_max + 1)])
    jj, kk = np.meshgrid(np.arange(1, config.j_max + 1), np.arange(config.k_max + 1), indexing="ij")
    jj, kk = jj.ravel(), kk.ravel()
    lam = radial[jj - 1] - temporal[kk]
    lattice = profile.b * (4 * jj + config.n - 3) - profile.a * kk
    label = np.where(lam < config.mu, Subspace.E1.value, np.where(lam < config.beta, Subspace.E2.value, Subspace.E3.value))

    spectrum = SpectrumTable(
        config=config,
        profile=profile,
        zeros=table,
        j=jj.astype(np.int64),
        k=kk.astype(np.int64),
        gamma=table.zeros[jj - 1],
        lam=lam,
        resonant=lattice == 0,
        label=label,
        guard=guard,
    )

    sigma = spectrum.sigma()
    for name, value in (("mu", config.mu), ("beta", config.beta)):
        near = _nearest(sigma, value)
        if abs(near - value) < config.delta_min:
            raise ValidationError(f"{name} is within delta_min of eigenvalue {near:g}")
    if config.mu >= config.beta:
        raise ValidationError(f"mu = {config.mu:g} must be below beta = {config.beta:g}")
    if not np.any((sigma > config.mu) & (sigma < config.beta)):
        raise ValidationError(f"open interval (mu, beta) = ({config.mu:g}, {config.beta:g}) contains no eigenvalue")

    constants = spectral_constants(spectrum, config)
    if config.mu >= constants.beta_plus - config.beta:
        raise ValidationError(f"mu = {config.mu:g} must lie below beta+ - beta = {constants.beta_plus - config.beta:g}")

    logger.debug(
        "spectrum: {} rows, delta={:.6g}, beta-={:.6g}, beta+={:.6g}, dims={}",
        len(spectrum),
        constants.delta,
        constants.beta_minus,
        constants.beta_plus,
        spectrum.dims(),
    )
    return attrs.evolve(spectrum, constants=constants)
