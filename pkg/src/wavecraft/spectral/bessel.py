# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Bessel functions of the first kind of order nu = (n - 2) / 2 and their positive zeros."""

import math

import numpy as np
from attrs import define, field
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special

from wavecraft.errors import AuditError, BesselDomainError, ConvergenceError
from wavecraft.utils.logger import logger

ZERO_TOL = 1e-12
_NEWTON_STEPS = 8
_SCAN_STEP = math.pi / 16


def _check_order(instance: object, attribute: object, value: float) -> None:
    if value < -0.5:
        raise BesselDomainError(f"Bessel order must be >= -1/2, got {value}")


@define(frozen=True)
class BesselOrder:
    """Order nu of J_nu; the radial Laplacian on the n-ball uses nu = (n - 2) / 2."""

    nu: float = field(validator=_check_order)

    @classmethod
    def from_dimension(cls, n: int) -> "BesselOrder":
        """Order attached to the space dimension ``n``."""
        if n < 1:
            raise BesselDomainError(f"space dimension must be >= 1, got {n}")
        return cls((n - 2) / 2)

    @property
    def is_half_integer(self) -> bool:
        """True exactly when the space dimension is odd."""
        return (2 * self.nu) % 2 == 1

    def closed_form_zero(self, j: int) -> float | None:
        """Exact zeros for nu = -1/2 (cos) and nu = 1/2 (sin); None otherwise."""
        if self.nu == -0.5:
            return (2 * j - 1) * math.pi / 2
        if self.nu == 0.5:
            return j * math.pi
        return None

    def mcmahon(self, j: int) -> float:
        """Leading McMahon guess (4j + 2nu - 1) pi / 4 for the j-th zero."""
        return (4 * j + 2 * self.nu - 1) * math.pi / 4


def eval_J(nu: BesselOrder, x: ArrayLike) -> NDArray[np.float64] | float:
    """Evaluate J_nu(x) for x >= 0.

    Raises:
        BesselDomainError: for negative x, or for nu = -1/2 at x = 0 where J diverges.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0):
        raise BesselDomainError("J_nu is only evaluated for x >= 0")
    if nu.nu < 0 and np.any(arr == 0):
        raise BesselDomainError(f"J_{nu.nu} is singular at x = 0")
    out = special.jv(nu.nu, arr)
    return float(out) if out.ndim == 0 else out


def eval_J_prime(nu: BesselOrder, x: ArrayLike) -> NDArray[np.float64] | float:
    """Evaluate dJ_nu/dx for x > 0 via the recurrence (J_{nu-1} - J_{nu+1}) / 2."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0):
        raise BesselDomainError("J_nu' is only evaluated for x > 0")
    out = special.jvp(nu.nu, arr)
    return float(out) if out.ndim == 0 else out


def scaled_radial(nu: BesselOrder, x: ArrayLike) -> NDArray[np.float64]:
    """Evaluate x^{-nu} J_nu(x) including its finite limit 1 / (2^nu Gamma(nu + 1)) at x = 0."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    at_zero = arr == 0
    out[at_zero] = 1.0 / (2.0**nu.nu * special.gamma(nu.nu + 1.0))
    pos = ~at_zero
    out[pos] = arr[pos] ** (-nu.nu) * special.jv(nu.nu, arr[pos])
    return out


@define(frozen=True, eq=False)
class BesselZeroTable:
    """The first positive zeros gamma_1 < gamma_2 < ... of J_nu."""

    order: BesselOrder
    zeros: NDArray[np.float64]

    def __len__(self) -> int:
        """Number of stored zeros."""
        return len(self.zeros)

    def gamma(self, j: int) -> float:
        """The j-th positive zero (1-based)."""
        return float(self.zeros[j - 1])

    def residuals(self) -> NDArray[np.float64]:
        """|J_nu(gamma_j)| for every stored zero."""
        return np.abs(special.jv(self.order.nu, self.zeros))

    def audit(self) -> dict[str, object]:
        """Re-check ordering, residuals and that no zero was skipped between stored ones."""
        increasing = bool(np.all(np.diff(self.zeros) > 0))
        worst = float(self.residuals().max()) if len(self) else 0.0
        skipped = _count_skipped(self.order, self.zeros)
        return {
            "count": len(self),
            "increasing": increasing,
            "max_residual": worst,
            "skipped": skipped,
            "ok": increasing and worst <= ZERO_TOL and skipped == 0,
        }


def _sign_changes(nu: BesselOrder, a: float, b: float, samples: int) -> int:
    xs = np.linspace(a, b, samples)
    vals = special.jv(nu.nu, xs)
    return int(np.count_nonzero(np.signbit(vals[1:]) != np.signbit(vals[:-1])))


def _count_skipped(nu: BesselOrder, zeros: NDArray[np.float64]) -> int:
    """Count sign changes strictly between consecutive stored zeros (and before the first)."""
    skipped = 0
    left = 1e-9
    for z in zeros:
        pad = 1e-6 * max(1.0, z)
        if z - pad > left + pad:
            skipped += _sign_changes(nu, left + pad, z - pad, 64)
        left = z
    return skipped


def _polish(nu: BesselOrder, x: float) -> float:
    """Newton refinement; keeps the best iterate."""
    best, best_val = x, abs(special.jv(nu.nu, x))
    for _ in range(_NEWTON_STEPS):
        if best_val <= 1e-16:
            break
        step = special.jv(nu.nu, best) / special.jvp(nu.nu, best)
        cand = best - step
        val = abs(special.jv(nu.nu, cand))
        if val >= best_val:
            break
        best, best_val = cand, val
    return best


def _bracket(nu: BesselOrder, j: int, left: float) -> tuple[float, float]:
    """Sign-change bracket for the j-th zero, strictly right of the previous zero ``left``."""
    guess = nu.mcmahon(j)
    a, b = max(guess - math.pi / 2, left + 1e-9), guess + math.pi / 2
    if a < b and special.jv(nu.nu, a) * special.jv(nu.nu, b) < 0 and _sign_changes(nu, a, b, 33) == 1:
        return a, b

    # McMahon is poor for small j and large nu: march right from the previous zero.
    a = left + 1e-9
    fa = special.jv(nu.nu, a)
    for _ in range(100_000):
        b = a + _SCAN_STEP
        fb = special.jv(nu.nu, b)
        if fa * fb < 0:
            return a, b
        a, fa = b, fb
    raise ConvergenceError(f"no sign change found for zero {j} of J_{nu.nu}")


def zeros(nu: BesselOrder, j_max: int) -> BesselZeroTable:
    """Compute the first ``j_max`` positive zeros of J_nu.

    Every zero is bracketed around its McMahon guess, located with Brent's
    method and polished by Newton steps.

    Raises:
        ConvergenceError: when a zero cannot be brought below the residual tolerance.
    """
    if j_max < 1:
        raise BesselDomainError(f"j_max must be >= 1, got {j_max}")

    found = np.empty(j_max)
    left = 0.0
    for j in range(1, j_max + 1):
        a, b = _bracket(nu, j, left)
        try:
            root = optimize.brentq(lambda x: special.jv(nu.nu, x), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise ConvergenceError(f"Brent iteration failed for zero {j} of J_{nu.nu}: {exc}") from exc
        root = _polish(nu, root)
        exact = nu.closed_form_zero(j)
        if exact is not None and abs(root - exact) <= 1e-12 * exact:
            root = exact
        if abs(special.jv(nu.nu, root)) > ZERO_TOL:
            raise ConvergenceError(f"zero {j} of J_{nu.nu} stuck at residual", residual=float(abs(special.jv(nu.nu, root))))
        found[j - 1] = root
        left = root

    table = BesselZeroTable(nu, found)
    report = table.audit()
    if report["skipped"]:
        raise AuditError(f"zero search for J_{nu.nu} skipped {report['skipped']} sign changes")
    logger.debug("computed {} zeros of J_{} (max residual {:.2e})", j_max, nu.nu, report["max_residual"])
    return table


def interlaces(nu: BesselOrder, j_max: int) -> bool:
    """True when the zeros of J_nu and J_{nu+1} strictly interlace up to index ``j_max``."""
    lower = zeros(nu, j_max + 1).zeros
    upper = zeros(BesselOrder(nu.nu + 1), j_max).zeros
    return bool(np.all(lower[:-1] < upper) and np.all(upper < lower[1:]))
