# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Saddle-point reduction: for u in E2 find h(u) in E1 + E3 with P13 Phi'(u + h) = 0.

Phi is strongly concave along E1 and strongly convex along E3, so the
complement equation (lambda - mu) c - N(c) = 0 is solved by a preconditioned
ascent/descent sweep

    c_m <- c_m - g_m / (lambda_m - mu - s)

which ascends on E1 (denominator -(|lambda - mu| + s)) and descends on E3
(denominator lambda - mu - s > 0). Both halves are updated simultaneously from
one gradient per sweep; there is no alternation between an E1 pass and an E3
pass. With 0 <= f_u <= 2s the sweep contracts by s / min(delta + s, mu0 - s) < 1
in the |lambda - mu - s|-weighted norm.
"""

import math

import numpy as np
from attrs import define, field
from numpy.typing import NDArray

from wavecraft.errors import ConvergenceError, DomainError, MonotonicityError
from wavecraft.spectral.space import CoefficientField, GridSampling, basis_for
from wavecraft.spectral.spectrum import Subspace
from wavecraft.utils.logger import logger
from wavecraft.variational.functional import EnergyFunctional, Nonlinearity

Array = NDArray[np.float64]

DEFAULT_TOL_INNER = 1e-9
DEFAULT_BUDGET = 10_000
_SLOPE_MARGIN = 1.25
_GROWTH_STREAK = 25
_BLOWUP = 1e8


@define(frozen=True, eq=False)
class ReducedEval:
    """h(u), Phi-hat(u) and its gradient at one u in E2."""

    u: CoefficientField
    h: CoefficientField
    phi_hat: float
    reduced_grad: CoefficientField
    inner_residual: float
    iterations: int
    history: tuple[float, ...] = field(factory=tuple)
    nonmonotone: int = 0

    @property
    def point(self) -> CoefficientField:
        """u + h(u), the candidate critical point of Phi."""
        return self.u + self.h

    @property
    def reduced_grad_norm(self) -> float:
        """E-dual norm of the reduced gradient."""
        return self.reduced_grad.dual_norm()


@define(frozen=True, eq=False)
class BatchSolve:
    """Raw arrays of a batched inner solve; row i belongs to input row i."""

    h: Array
    phi_hat: Array
    grad: Array
    residual: Array
    iterations: NDArray[np.int64]
    nonmonotone: NDArray[np.int64]
    history: list[list[float]]


class SaddleReduction:
    """Inner max-min solver bound to one energy functional."""

    def __init__(self, functional: EnergyFunctional, tol_inner: float = DEFAULT_TOL_INNER, budget: int = DEFAULT_BUDGET) -> None:
        """Precompute the splitting masks and the preconditioner data."""
        self.functional = functional
        self.basis = functional.basis
        self.tol_inner = tol_inner
        self.budget = budget
        self.e2 = self.basis.mask(Subspace.E2)
        self.e13 = ~self.e2
        self._inv_w = 1.0 / self.basis.e_weights
        self._lipschitz = functional.nl.lipschitz

    def _slope_shift(self, u: Array) -> Array:
        slopes = np.atleast_1d(self.functional.max_slope_values(u))
        return 0.5 * np.minimum(self._lipschitz, _SLOPE_MARGIN * slopes)

    def _residual(self, g: Array) -> Array:
        return np.sqrt(np.sum(np.where(self.e13, g * g * self._inv_w, 0.0), axis=-1))

    def solve_batch(self, x: Array, h0: Array | None = None, tol: float | None = None, *, record: bool = False) -> BatchSolve:
        """Solve for h at every row of ``x`` (E2-supported coefficient arrays).

        Raises:
            ConvergenceError: if any row exhausts the sweep budget.
            MonotonicityError: if a row's residual grows persistently.
        """
        tol = self.tol_inner if tol is None else tol
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        rows = x.shape[0]
        if np.any(x[:, self.e13]):
            raise DomainError("reduction input must be supported in E2")
        h = np.zeros_like(x) if h0 is None else np.where(self.e13, np.atleast_2d(h0), 0.0)

        phi_hat = np.zeros(rows)
        grad = np.zeros_like(x)
        residual = np.full(rows, np.inf)
        iterations = np.zeros(rows, dtype=np.int64)
        nonmonotone = np.zeros(rows, dtype=np.int64)
        streak = np.zeros(rows, dtype=np.int64)
        first = np.full(rows, np.nan)
        history: list[list[float]] = [[] for _ in range(rows)]
        active = np.arange(rows)

        shift = self.basis.shift
        for sweep in range(self.budget + 1):
            c = x[active] + h[active]
            u = self.functional.values(c)
            g = self.functional.gradient(c, u)
            res = self._residual(g)

            prev = residual[active]
            grew = res > prev * (1.0 + 1e-12) + 1e-15
            if np.any(grew):
                nonmonotone[active[grew]] += 1
                logger.debug("inner residual grew on {} of {} rows at sweep {}", int(grew.sum()), len(active), sweep)
            streak[active] = np.where(grew, streak[active] + 1, 0)
            residual[active] = res
            iterations[active] = sweep
            first[active] = np.where(np.isnan(first[active]), res, first[active])
            if record:
                for i, value in zip(active, res, strict=True):
                    history[i].append(float(value))

            diverged = (streak[active] >= _GROWTH_STREAK) | (res > _BLOWUP * np.maximum(first[active], 1.0))
            if np.any(diverged):
                bad = int(active[np.argmax(diverged)])
                raise MonotonicityError(
                    f"inner solver diverging on row {bad}: residual {residual[bad]:.3e} after {sweep} sweeps",
                    residual=float(residual[bad]),
                    iterations=sweep,
                )

            done = res <= tol
            if np.any(done):
                idx = active[done]
                phi_hat[idx] = np.atleast_1d(self.functional.energy(c[done], u[done]))
                grad[idx] = np.where(self.e2, g[done], 0.0)
            active = active[~done]
            if active.size == 0:
                break
            if sweep == self.budget:
                worst = float(residual[active].max())
                raise ConvergenceError(
                    f"inner solver did not reach {tol:.1e} within {self.budget} sweeps (residual {worst:.3e})",
                    residual=worst,
                    iterations=sweep,
                )

            keep = ~done
            s = self._slope_shift(u[keep])[:, None]
            step = g[keep] / (shift - s)
            h[active] = np.where(self.e13, h[active] - step, 0.0)

        return BatchSolve(h=h, phi_hat=phi_hat, grad=grad, residual=residual, iterations=iterations, nonmonotone=nonmonotone, history=history)

    def solve(self, u: CoefficientField, h0: CoefficientField | None = None, tol: float | None = None) -> ReducedEval:
        """Single-field convenience wrapper with telemetry."""
        out = self.solve_batch(u.coeffs[None, :], None if h0 is None else h0.coeffs[None, :], tol, record=True)
        basis = self.basis
        return ReducedEval(
            u=CoefficientField(basis, u.coeffs),
            h=CoefficientField(basis, out.h[0]),
            phi_hat=float(out.phi_hat[0]),
            reduced_grad=CoefficientField(basis, out.grad[0]),
            inner_residual=float(out.residual[0]),
            iterations=int(out.iterations[0]),
            history=tuple(out.history[0]),
            nonmonotone=int(out.nonmonotone[0]),
        )


def _reduction(u: CoefficientField, nl: Nonlinearity, grid: GridSampling, tol_inner: float, budget: int) -> SaddleReduction:
    basis = u.basis if u.basis.grid is grid else basis_for(u.basis.table, grid)
    return SaddleReduction(EnergyFunctional(basis, nl), tol_inner, budget)


def solve_h(
    u: CoefficientField,
    nl: Nonlinearity,
    grid: GridSampling,
    tol_inner: float = DEFAULT_TOL_INNER,
    *,
    h0: CoefficientField | None = None,
    budget: int = DEFAULT_BUDGET,
) -> ReducedEval:
    """Compute h(u) for an E2-supported ``u``; ``h0`` warm-starts the sweeps."""
    return _reduction(u, nl, grid, tol_inner, budget).solve(u, h0)


def phi_hat_and_grad(
    u: CoefficientField,
    nl: Nonlinearity,
    grid: GridSampling,
    tol_inner: float = DEFAULT_TOL_INNER,
    *,
    h0: CoefficientField | None = None,
    budget: int = DEFAULT_BUDGET,
) -> ReducedEval:
    """Phi-hat(u) = Phi(u + h(u)) and its gradient P2 Phi'(u + h(u)); ``u`` is projected onto E2 first."""
    basis = u.basis if u.basis.grid is grid else basis_for(u.basis.table, grid)
    e2 = CoefficientField(basis, np.where(basis.mask(Subspace.E2), u.coeffs, 0.0))
    return _reduction(e2, nl, grid, tol_inner, budget).solve(e2, h0)


class ReducedProblem:
    """Phi-hat in E-orthonormal coordinates x of E2: c_m = x_i / sqrt|lambda_m - mu|."""

    def __init__(self, reduction: SaddleReduction) -> None:
        """Index E2 and remember its scaling."""
        self.reduction = reduction
        self.basis = reduction.basis
        self.index = np.flatnonzero(reduction.e2)
        self.scale = np.sqrt(self.basis.e_weights[self.index])

    @property
    def dim(self) -> int:
        """dim E2."""
        return len(self.index)

    def coeffs(self, x: Array) -> Array:
        """Full coefficient rows for coordinate rows ``x``."""
        x = np.atleast_2d(x)
        out = np.zeros((x.shape[0], self.basis.size))
        out[:, self.index] = x / self.scale
        return out

    def coordinates(self, c: Array) -> Array:
        """Inverse of ``coeffs`` on E2."""
        return np.atleast_2d(c)[:, self.index] * self.scale

    def field(self, x: Array) -> CoefficientField:
        """The E2 field of one coordinate vector."""
        return CoefficientField(self.basis, self.coeffs(x)[0])

    def evaluate(self, x: Array, h0: Array | None = None, tol: float | None = None) -> tuple[Array, Array, BatchSolve]:
        """Phi-hat and its coordinate gradient at every row of ``x``.

        The coordinate gradient is g_m / sqrt|lambda_m - mu|, so its Euclidean
        norm is the E-dual norm of the reduced gradient.
        """
        out = self.reduction.solve_batch(self.coeffs(x), h0, tol)
        return out.phi_hat, out.grad[:, self.index] / self.scale, out

    def full_gradient_norm(self, x: Array, h: Array) -> float:
        """E-dual norm of Phi'(u + h) over the whole truncation."""
        c = self.coeffs(x)[0] + h
        g = self.reduction.functional.gradient(c)
        return math.sqrt(float(np.sum(g * g / self.basis.e_weights)))
