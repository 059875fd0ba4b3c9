# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Critical points of the reduced functional Phi-hat on E2.

All searches run in E-orthonormal coordinates x of E2 (see ``ReducedProblem``),
so Euclidean lengths of x are E-norms and Euclidean gradient norms are E-dual
norms. Three finders are provided: a projected descent inside the ball of
radius r_bar, a multistart ascent for the global maximum, and a string method
with a climbing image for the mountain pass between 0 and R0 u0. Every point
is finished by a mode-following Newton polish on a finite-difference Hessian,
which ascends along as many modes as the kind of point has unstable directions.

For an autonomous f the discretized Phi is invariant under grid time shifts
and time reversal, and for an odd f under u -> -u. Points related by these
symmetries are the same solution; ``symmetry_orbit`` lists the images and the
bookkeeping below compares points modulo them.
"""

import math
from collections.abc import Callable
from enum import StrEnum

import attrs
import numpy as np
from attrs import define, field
from numpy.typing import NDArray
from scipy import optimize

from wavecraft.errors import ConvergenceError, DomainError, GeometryError, PathCollapseError
from wavecraft.spectral.space import Basis, CoefficientField, embed
from wavecraft.utils.logger import logger
from wavecraft.variational.functional import EnergyFunctional
from wavecraft.variational.reduction import ReducedProblem

Array = NDArray[np.float64]
Orbit = Callable[[Array], Array]

_ARMIJO = 1e-4
_MAX_STEP = 8.0
_MIN_STEP = 1e-12
_FIRST_ORDER_TOL = 1e-3
_NEWTON_ITERS = 40
_EIG_FLOOR = 1e-6
_NEWTON_TRUST = 0.1
_MOVE_FRACTION = 0.5
_MERGE = 1e-2
_LEVEL_SLACK = 1e-7


class CriticalKind(StrEnum):
    """How a critical point was found."""

    MIN_IN_BALL = "min_in_ball"
    GLOBAL_MAX = "global_max"
    MOUNTAIN_PASS = "mountain_pass"

    def unstable_modes(self, dim: int) -> int:
        """Number of Hessian modes the Newton polish ascends along."""
        if self is CriticalKind.MIN_IN_BALL:
            return 0
        return dim if self is CriticalKind.GLOBAL_MAX else min(1, dim)


@define(frozen=True)
class GeometryEstimate:
    """Measured mountain-pass geometry of Phi-hat; ``ok`` is False when a constant could not be found."""

    r_bar: float | None
    tau: float | None
    R0: float | None
    M_hat: float
    b_hat: float
    radii: tuple[float, ...]
    ring_min: tuple[float, ...]
    ring_max: tuple[float, ...]
    directions: int
    symmetric: bool
    failure: str | None = None

    @property
    def ok(self) -> bool:
        """True when r_bar, tau and R0 were all found."""
        return self.failure is None

    def require(self) -> "GeometryEstimate":
        """Return self, or raise the recorded geometry failure."""
        if self.failure is not None:
            raise GeometryError(self.failure)
        return self


@define(frozen=True, eq=False)
class CriticalPointReport:
    """One critical point u2 + h(u2) of Phi with its level, residuals and telemetry.

    ``lifted_residual`` is the residual of this point copied into the doubled
    truncation; ``notch_residual`` is the residual, in that same truncation, of
    the point re-solved there, and ``notch_shift`` the E-distance between them.
    """

    kind: CriticalKind
    x: Array
    u2: Array
    h: Array
    phi_hat: float
    reduced_grad_norm: float
    inner_residual: float
    iterations: int
    trivial: bool
    history: tuple[float, ...] = field(factory=tuple)
    status: str = "ok"
    side: int = 0
    weak_residual: float | None = None
    notch_residual: float | None = None
    lifted_residual: float | None = None
    notch_shift: float | None = None
    full_grad_norm: float | None = None
    scan_match: bool | None = None

    @property
    def point(self) -> Array:
        """Coefficients of u2 + h."""
        return self.u2 + self.h

    @property
    def converged(self) -> bool:
        """True when the polish reached the outer tolerance."""
        return self.status == "ok"

    @property
    def residual_decays(self) -> bool | None:
        """Whether re-solving in the doubled truncation lowered the residual there; None before ``certify``."""
        if self.notch_residual is None or self.lifted_residual is None:
            return None
        return self.notch_residual < self.lifted_residual or self.lifted_residual == 0.0


# ---------------------------------------------------------------------------
# Symmetries
# ---------------------------------------------------------------------------


def symmetry_orbit(basis: Basis, *, autonomous: bool, odd: bool) -> Orbit:
    """Map a coefficient vector to the stack of its images (itself first).

    Grid time shifts by T / nt and time reversal are exact symmetries of the
    discretized Phi when f does not depend on t; u -> -u is one when f is odd.
    """
    grid = basis.grid

    def images(point: Array) -> Array:
        out = np.asarray(point, dtype=np.float64)[None, :]
        if autonomous:
            shifts = [basis.time_shift(out[0], m * grid.T / grid.nt) for m in range(1, grid.nt)]
            out = np.vstack([out, *shifts])
            out = np.vstack([out, basis.time_reversal(out)])
        return np.vstack([out, -out]) if odd else out

    return images


def orbit_distance(a: Array, b: Array, weights: Array, orbit: Orbit | None = None) -> float:
    """Smallest E-norm distance between ``b`` and an image of ``a``."""
    images = np.asarray(a, dtype=np.float64)[None, :] if orbit is None else orbit(a)
    diff = images - np.asarray(b, dtype=np.float64)[None, :]
    return float(np.sqrt(np.min(np.sum(weights * diff * diff, axis=1))))


# ---------------------------------------------------------------------------
# Local solvers
# ---------------------------------------------------------------------------


@define
class _Iterate:
    x: Array
    value: float
    grad: Array
    h: Array
    residual: float


def _evaluate(problem: ReducedProblem, x: Array, h0: Array | None = None) -> _Iterate:
    values, grads, out = problem.evaluate(x[None, :], None if h0 is None else h0[None, :])
    return _Iterate(x=x.copy(), value=float(values[0]), grad=grads[0], h=out.h[0], residual=float(out.residual[0]))


def _project(x: Array, radius: float) -> Array:
    norm = float(np.linalg.norm(x))
    return x if norm <= radius else x * (radius / norm)


def _project_rows(x: Array, radius: float) -> Array:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x * np.minimum(1.0, radius / np.maximum(norms, 1e-300))


def _first_order(problem: ReducedProblem, x0: Array, *, sign: float, radius: float, tol: float, budget: int) -> tuple[_Iterate, list[float]]:
    """Projected Armijo descent (sign = +1) or ascent (sign = -1) inside the ball of ``radius``."""
    it = _evaluate(problem, _project(np.asarray(x0, dtype=np.float64), radius))
    history = [it.value]
    step = 1.0
    for _ in range(budget):
        trial = _project(it.x - sign * it.grad, radius)
        if float(np.linalg.norm(trial - it.x)) <= tol:
            break
        while step >= _MIN_STEP:
            x_new = _project(it.x - step * sign * it.grad, radius)
            cand = _evaluate(problem, x_new, it.h)
            if sign * (cand.value - it.value) <= _ARMIJO * sign * float(it.grad @ (x_new - it.x)):
                it = cand
                history.append(it.value)
                step = min(2.0 * step, _MAX_STEP)
                break
            step *= 0.5
        else:
            logger.debug("line search stalled at |x| = {:.6g}", float(np.linalg.norm(it.x)))
            break
    return it, history


def _fd_hessian(problem: ReducedProblem, it: _Iterate) -> Array:
    d = len(it.x)
    eps = 1e-4 * max(1.0, float(np.linalg.norm(it.x)))
    shifts = np.vstack([it.x + eps * np.eye(d), it.x - eps * np.eye(d)])
    _, grads, _ = problem.evaluate(shifts, np.repeat(it.h[None, :], 2 * d, axis=0))
    hess = (grads[:d] - grads[d:]).T / (2 * eps)
    return 0.5 * (hess + hess.T)


def _newton_polish(problem: ReducedProblem, it: _Iterate, tol: float, *, ascend: int) -> tuple[_Iterate, bool]:
    """Drive the reduced gradient below ``tol`` with mode-following Newton steps.

    In the eigenbasis of the Hessian the ``ascend`` lowest modes take the
    ascent step g / |lambda| and the others the descent step -g / |lambda|, so
    the iteration settles on critical points with that many unstable modes.
    Steps are capped at a trust length and backtracked on |grad|.
    """
    for _ in range(_NEWTON_ITERS):
        gnorm = float(np.linalg.norm(it.grad))
        if gnorm <= tol:
            return it, True
        lam, vec = np.linalg.eigh(_fd_hessian(problem, it))
        scale = np.maximum(np.abs(lam), _EIG_FLOOR * max(float(np.max(np.abs(lam))), 1e-300))
        sign = np.where(np.arange(len(lam)) < ascend, 1.0, -1.0)
        p = vec @ (sign * (vec.T @ it.grad) / scale)
        trust = _NEWTON_TRUST * max(1.0, float(np.linalg.norm(it.x)))
        p *= min(1.0, trust / max(float(np.linalg.norm(p)), 1e-300))
        t = 1.0
        while t >= 1e-6:
            cand = _evaluate(problem, it.x + t * p, it.h)
            if float(np.linalg.norm(cand.grad)) < (1.0 - _ARMIJO * t) * gnorm:
                it = cand
                break
            t *= 0.5
        else:
            break
    return it, float(np.linalg.norm(it.grad)) <= tol


def _report(problem: ReducedProblem, it: _Iterate, kind: CriticalKind, history: list[float], *, status: str = "ok", side: int = 0) -> CriticalPointReport:
    u2 = problem.coeffs(it.x)[0]
    return CriticalPointReport(
        kind=kind,
        x=it.x,
        u2=u2,
        h=it.h,
        phi_hat=it.value,
        reduced_grad_norm=float(np.linalg.norm(it.grad)),
        inner_residual=it.residual,
        iterations=len(history),
        trivial=float(np.linalg.norm(it.x)) <= 1e-10 and not np.any(it.h),
        history=tuple(history),
        status=status,
        side=side,
    )


def _ball_starts(rng: np.random.Generator, count: int, dim: int, radius: float) -> list[Array]:
    starts = []
    for _ in range(count):
        d = rng.standard_normal(dim)
        d /= np.linalg.norm(d)
        starts.append(d * radius * rng.uniform() ** (1.0 / dim))
    return starts


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


def _directions(dim: int, count: int, symmetric: bool, rng: np.random.Generator) -> Array:
    if dim == 1:
        return np.array([[1.0]]) if symmetric else np.array([[1.0], [-1.0]])
    if dim == 2:
        span = math.pi if symmetric else 2.0 * math.pi
        angles = span * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    d = rng.standard_normal((count, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _ring_values(problem: ReducedProblem, radius: float, dirs: Array, h0: Array | None, tol: float | None) -> tuple[Array, Array]:
    values, _, out = problem.evaluate(radius * dirs, h0, tol)
    return values, out.h


def estimate_geometry(
    problem: ReducedProblem,
    *,
    rng: np.random.Generator,
    ring_directions: int = 48,
    radius_samples: int = 64,
    r_max: float = 60.0,
    symmetric: bool = False,
) -> GeometryEstimate:
    """Sample Phi-hat on rings |x| = r to find r_bar, tau, R0 and the bounds M_hat, b_hat.

    ``symmetric`` halves the directions when Phi-hat(-u) = Phi-hat(u), which
    holds for odd autonomous nonlinearities.
    """
    if problem.dim == 0:
        raise DomainError("E2 is empty; there is nothing to search")
    dirs = _directions(problem.dim, ring_directions, symmetric, rng)
    radii = r_max * np.arange(1, radius_samples + 1) / radius_samples
    values = np.empty((radius_samples, len(dirs)))
    cache: list[Array] = []
    h = None
    for i, radius in enumerate(radii):
        values[i], h = _ring_values(problem, float(radius), dirs, h, None)
        cache.append(h)
    ring_min, ring_max = values.min(axis=1), values.max(axis=1)
    m_hat = max(0.0, float(values.max()))

    def estimate(r_bar: float | None, tau: float | None, r0: float | None, failure: str | None) -> GeometryEstimate:
        inner = values[radii <= r_bar] if r_bar is not None else values
        return GeometryEstimate(
            r_bar=r_bar,
            tau=tau,
            R0=r0,
            M_hat=m_hat,
            b_hat=min(0.0, float(inner.min())) if inner.size else 0.0,
            radii=tuple(float(r) for r in radii),
            ring_min=tuple(float(v) for v in ring_min),
            ring_max=tuple(float(v) for v in ring_max),
            directions=len(dirs),
            symmetric=symmetric,
            failure=failure,
        )

    positive = ring_min > 0
    if not np.any(positive):
        logger.warning("geometry: no sampled radius has a positive ring minimum")
        return estimate(None, None, None, "no radius yields a positive ring minimum of Phi-hat")

    best = int(np.argmax(np.where(positive, ring_min, -np.inf)))
    lo = float(radii[best - 1]) if best > 0 else 0.5 * float(radii[0])
    hi = float(radii[min(best + 1, radius_samples - 1)])
    warm = cache[best]

    def negative_ring_min(radius: float) -> float:
        vals, _ = _ring_values(problem, radius, dirs, warm, None)
        return -float(vals.min())

    r_bar, tau = float(radii[best]), float(ring_min[best])
    if hi > lo:
        res = optimize.minimize_scalar(negative_ring_min, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3 * (hi - lo)})
        if res.success and -res.fun > tau:
            r_bar, tau = float(res.x), float(-res.fun)

    nonpositive_tail = np.flip(np.logical_and.accumulate(np.flip(ring_max <= 0)))
    candidates = np.flatnonzero(nonpositive_tail & (radii > r_bar))
    if candidates.size == 0:
        logger.warning("geometry: Phi-hat stays positive in some direction up to r_max = {:.6g}", r_max)
        return estimate(r_bar, tau, None, f"Phi-hat is not <= 0 on all sampled directions up to r_max = {r_max:g}")
    r0 = float(radii[candidates[0]])
    logger.info("geometry: r_bar={:.6g} tau={:.6g} R0={:.6g} M_hat={:.6g}", r_bar, tau, r0, m_hat)
    return estimate(r_bar, tau, r0, None)


# ---------------------------------------------------------------------------
# Finders
# ---------------------------------------------------------------------------


def find_min_in_ball(
    geometry: GeometryEstimate,
    problem: ReducedProblem,
    *,
    rng: np.random.Generator,
    starts: int = 8,
    tol_outer: float = 1e-6,
    budget: int = 400,
) -> CriticalPointReport:
    """Multistart projected descent inside B_r_bar; the origin is always one of the starts.

    Raises:
        ConvergenceError: when every start ends on the ball boundary.
    """
    radius = geometry.r_bar if geometry.r_bar is not None else geometry.radii[-1]
    candidates: list[tuple[_Iterate, list[float]]] = []
    for x0 in [np.zeros(problem.dim), *_ball_starts(rng, starts - 1, problem.dim, radius)]:
        it, history = _first_order(problem, x0, sign=1.0, radius=radius, tol=max(tol_outer, _FIRST_ORDER_TOL), budget=budget)
        if float(np.linalg.norm(it.x)) < radius * (1.0 - 1e-9):
            candidates.append((it, history))
    if not candidates:
        raise ConvergenceError(f"every descent start ended on the boundary of B_r_bar (r_bar = {radius:.6g})")

    it, history = min(candidates, key=lambda c: c[0].value)
    it, converged = _newton_polish(problem, it, tol_outer, ascend=0)
    history.append(it.value)
    report = _report(problem, it, CriticalKind.MIN_IN_BALL, history, status="ok" if converged else "not_converged")
    logger.info("min in ball: sigma1={:.10g} |grad|={:.3e} trivial={}", report.phi_hat, report.reduced_grad_norm, report.trivial)
    return report


def local_maxima(
    problem: ReducedProblem,
    radius: float,
    *,
    rng: np.random.Generator,
    starts: int = 8,
    tol_outer: float = 1e-6,
    budget: int = 400,
    distinct: float = 1e-3,
    orbit: Orbit | None = None,
) -> list[CriticalPointReport]:
    """Distinct local maxima reached by multistart ascent in the ball of ``radius``.

    Ascent endpoints are merged modulo ``orbit`` first, so only one endpoint
    per symmetry class is Newton-polished. Converged maxima come first, best
    first; maxima that stay above ``tol_outer`` follow with status
    ``not_converged``. When every ascent leaves the ball, the best boundary
    point is returned alone with status ``boundary``.
    """
    weights = problem.basis.e_weights
    ends: list[tuple[_Iterate, list[float]]] = []
    boundary_hits: list[CriticalPointReport] = []
    for x0 in _ball_starts(rng, starts, problem.dim, radius):
        it, history = _first_order(problem, x0, sign=-1.0, radius=radius, tol=max(tol_outer, _FIRST_ORDER_TOL), budget=budget)
        if float(np.linalg.norm(it.x)) >= radius * (1.0 - 1e-9):
            boundary_hits.append(_report(problem, it, CriticalKind.GLOBAL_MAX, history, status="boundary"))
        else:
            ends.append((it, history))

    representatives: list[tuple[_Iterate, list[float], Array]] = []
    coarse = max(distinct, _MERGE)
    for it, history in sorted(ends, key=lambda e: -e[0].value):
        point = problem.coeffs(it.x)[0] + it.h
        if all(orbit_distance(point, other, weights, orbit) > coarse for _, _, other in representatives):
            representatives.append((it, history, point))
    logger.debug("global max: {} ascents, {} polished", len(ends), len(representatives))

    found: list[CriticalPointReport] = []
    for it, history, _ in representatives:
        it, converged = _newton_polish(problem, it, tol_outer, ascend=problem.dim)
        history.append(it.value)
        report = _report(problem, it, CriticalKind.GLOBAL_MAX, history, status="ok" if converged else "not_converged")
        if all(orbit_distance(report.point, other.point, weights, orbit) > distinct for other in found):
            found.append(report)
    if not found:
        return sorted(boundary_hits, key=lambda r: -r.phi_hat)[:1]
    return sorted(found, key=lambda r: (not r.converged, -r.phi_hat))


def find_global_max(
    problem: ReducedProblem,
    radius: float,
    *,
    rng: np.random.Generator,
    starts: int = 8,
    tol_outer: float = 1e-6,
    budget: int = 400,
    distinct: float = 1e-3,
    orbit: Orbit | None = None,
) -> CriticalPointReport:
    """sigma2: the best converged multistart local maximum in the box of ``radius``.

    A maximizer stuck on the box boundary comes back with status ``boundary``,
    which signals unbounded ascent.
    """
    best = local_maxima(problem, radius, rng=rng, starts=starts, tol_outer=tol_outer, budget=budget, distinct=distinct, orbit=orbit)[0]
    if best.status == "boundary":
        logger.warning("global max: every ascent left the box of radius {:.6g}", radius)
    else:
        logger.info("global max: sigma2={:.10g} |grad|={:.3e}", best.phi_hat, best.reduced_grad_norm)
    return best


def _reparametrize(path: Array) -> Array:
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] == 0:
        return path
    target = np.linspace(0.0, arc[-1], len(path))
    return np.column_stack([np.interp(target, arc, path[:, i]) for i in range(path.shape[1])])


def mountain_pass(
    u0_direction: Array,
    geometry: GeometryEstimate,
    problem: ReducedProblem,
    *,
    nodes: int = 64,
    budget: int = 400,
    tol_outer: float = 1e-6,
    step: float = 0.2,
    maximizer: Array | None = None,
    distinct: float = 1e-3,
    orbit: Orbit | None = None,
    side: int = 1,
) -> CriticalPointReport:
    """String method with a climbing image on the segment from 0 to R0 u0.

    Interior nodes descend transversally to the path and are redistributed by
    arclength on both sides of the highest node; the highest node climbs along
    the tangent. No node moves more than half the initial node spacing per
    iteration, and nodes are kept in the ball of radius R0, outside of which
    Phi-hat <= 0. The result is Newton-polished towards a point with one
    unstable mode.

    Raises:
        GeometryError: without a usable geometry, or when Phi-hat(R0 u0) > 0.
        PathCollapseError: when no interior node rises above the path ends, or
            the pass lands on the origin or on an image of ``maximizer`` (a full
            coefficient vector).
    """
    geometry.require()
    radius = float(geometry.R0)
    u0 = np.asarray(u0_direction, dtype=np.float64)
    u0 = u0 / np.linalg.norm(u0)
    end = radius * u0
    end_value = _evaluate(problem, end).value
    if end_value > 0:
        raise GeometryError(f"Phi-hat(R0 u0) = {end_value:.6g} is positive; R0 does not bound the pass")

    max_move = _MOVE_FRACTION * radius / (nodes - 1)
    path = np.linspace(0.0, 1.0, nodes)[:, None] * end[None, :]
    h = np.zeros((nodes - 2, problem.basis.size))
    for iteration in range(budget):
        values, grads, out = problem.evaluate(path[1:-1], h)
        h = out.h
        climber = 1 + int(np.argmax(values))
        tangents = path[2:] - path[:-2]
        tangents /= np.maximum(np.linalg.norm(tangents, axis=1, keepdims=True), 1e-300)
        along = np.sum(grads * tangents, axis=1, keepdims=True)
        force = -(grads - along * tangents)
        ci = climber - 1
        force[ci] = -grads[ci] + 2.0 * along[ci] * tangents[ci]

        move = step * force
        length = np.linalg.norm(move, axis=1, keepdims=True)
        move *= np.minimum(1.0, max_move / np.maximum(length, 1e-300))
        moved = path.copy()
        moved[1:-1] = _project_rows(path[1:-1] + move, radius)
        # Redistribute each side of the climbing image separately.
        moved[: climber + 1] = _reparametrize(moved[: climber + 1])
        moved[climber:] = _reparametrize(moved[climber:])
        shift = float(np.max(np.linalg.norm(moved - path, axis=1)))
        path = moved
        if shift <= 1e-8 or float(np.linalg.norm(grads[ci])) <= max(tol_outer, 1e-4):
            logger.debug("string converged after {} iterations (climber {}, shift {:.2e})", iteration + 1, climber, shift)
            break

    peak = float(values[ci])
    if peak <= max(0.0, end_value):
        raise PathCollapseError(f"no interior node rises above the path ends (peak {peak:.6g})")
    start = _evaluate(problem, path[climber], h[ci])
    it, converged = _newton_polish(problem, start, tol_outer, ascend=CriticalKind.MOUNTAIN_PASS.unstable_modes(problem.dim))
    report = _report(problem, it, CriticalKind.MOUNTAIN_PASS, [start.value, it.value], status="ok" if converged else "not_converged", side=side)
    label = "+" if side > 0 else "-"
    if report.trivial:
        raise PathCollapseError(f"mountain pass along {label}u0 collapsed onto the origin")
    if maximizer is not None and orbit_distance(report.point, maximizer, problem.basis.e_weights, orbit) <= distinct:
        raise PathCollapseError(f"mountain pass along {label}u0 collapsed onto the global maximizer")
    logger.info("mountain pass ({}u0): c={:.10g} |grad|={:.3e}", label, report.phi_hat, report.reduced_grad_norm)
    return report


# ---------------------------------------------------------------------------
# Certification and bookkeeping
# ---------------------------------------------------------------------------


def certify(report: CriticalPointReport, functional: EnergyFunctional, fine: ReducedProblem | None = None, *, tol_outer: float = 1e-6) -> CriticalPointReport:
    """Attach the coefficient-space weak residual, and its decay in the ``fine`` truncation.

    The point is copied into ``fine``, whose residual there is ``lifted_residual``;
    the reduction and the Newton polish are then re-run in ``fine`` starting from
    the copy, and the re-solved point's residual is ``notch_residual``.
    """
    point = report.point
    g = functional.gradient(point)
    weak = float(np.linalg.norm(g))
    full = float(np.sqrt(np.sum(g * g / functional.basis.e_weights)))
    if fine is None:
        return attrs.evolve(report, weak_residual=weak, full_grad_norm=full)

    fine_functional = fine.reduction.functional
    lifted = embed(CoefficientField(functional.basis, point), fine.basis).coeffs
    start = _evaluate(fine, fine.coordinates(lifted)[0], np.where(fine.reduction.e13, lifted, 0.0))
    it, converged = _newton_polish(fine, start, tol_outer, ascend=report.kind.unstable_modes(fine.dim))
    refined = fine.coeffs(it.x)[0] + it.h
    diff = refined - lifted
    certified = attrs.evolve(
        report,
        weak_residual=weak,
        full_grad_norm=full,
        lifted_residual=float(np.linalg.norm(fine_functional.gradient(lifted))),
        notch_residual=float(np.linalg.norm(fine_functional.gradient(refined))),
        notch_shift=float(np.sqrt(np.sum(fine.basis.e_weights * diff * diff))),
    )
    if not converged:
        logger.warning("{}: polish in the doubled truncation stopped at |grad| = {:.3e}", report.kind, float(np.linalg.norm(it.grad)))
    return certified


def pairwise_distances(reports: list[CriticalPointReport], weights: Array) -> Array:
    """E-norm distances between the full points u2 + h of ``reports``."""
    pts = np.array([r.point for r in reports])
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(weights * diff * diff, axis=-1))


def count_distinct(reports: list[CriticalPointReport], weights: Array, threshold: float, *, orbit: Orbit | None = None, nontrivial: bool = False) -> int:
    """Number of converged points at least ``threshold`` apart modulo ``orbit``, counted greedily."""
    kept: list[Array] = []
    for r in reports:
        if not r.converged or (nontrivial and r.trivial):
            continue
        if all(orbit_distance(r.point, other, weights, orbit) >= threshold for other in kept):
            kept.append(r.point)
    return len(kept)


@define(frozen=True)
class LevelChain:
    """sigma1 <= Phi-hat(0) <= 0 < tau <= c+ <= sigma2, with the strict c+ < sigma2 reported apart."""

    sigma1: float
    phi_hat_zero: float
    tau: float | None
    c_plus: float | None
    c_minus: float | None
    sigma2: float
    holds: bool
    strict_upper: bool


def level_chain(
    minimum: CriticalPointReport,
    maximum: CriticalPointReport,
    geometry: GeometryEstimate,
    c_plus: CriticalPointReport | None,
    c_minus: CriticalPointReport | None = None,
    slack: float = _LEVEL_SLACK,
) -> LevelChain:
    """Check the ordering of the critical levels; without a pass level the chain does not hold."""
    tau = geometry.tau
    cp = c_plus.phi_hat if c_plus is not None else None
    holds = (
        cp is not None
        and tau is not None
        and tau > 0
        and minimum.phi_hat <= slack
        and tau <= cp + slack
        and cp <= maximum.phi_hat + slack
    )
    return LevelChain(
        sigma1=minimum.phi_hat,
        phi_hat_zero=0.0,
        tau=tau,
        c_plus=cp,
        c_minus=c_minus.phi_hat if c_minus is not None else None,
        sigma2=maximum.phi_hat,
        holds=bool(holds),
        strict_upper=cp is not None and cp < maximum.phi_hat - slack,
    )


# ---------------------------------------------------------------------------
# Dense scan oracle
# ---------------------------------------------------------------------------


@define(frozen=True, eq=False)
class DenseScan:
    """Phi-hat on a P x P grid of E2 coordinates (dim E2 = 2); values[i, j] sits at (xs[i], xs[j])."""

    xs: Array
    values: Array

    @property
    def spacing(self) -> float:
        """Grid step h."""
        return float(self.xs[1] - self.xs[0])

    def stationary_cells(self) -> NDArray[np.bool_]:
        """Interior nodes with |central gradient| <= sqrt(2) h |Hessian|_F."""
        v, h = self.values, self.spacing
        out = np.zeros_like(v, dtype=bool)
        c = v[1:-1, 1:-1]
        g1 = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * h)
        g2 = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * h)
        h11 = (v[2:, 1:-1] - 2 * c + v[:-2, 1:-1]) / h**2
        h22 = (v[1:-1, 2:] - 2 * c + v[1:-1, :-2]) / h**2
        h12 = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h**2)
        frob = np.sqrt(h11**2 + h22**2 + 2 * h12**2)
        out[1:-1, 1:-1] = np.hypot(g1, g2) <= math.sqrt(2.0) * h * frob
        return out

    def matches(self, x: Array) -> bool:
        """True when a stationary cell lies within one grid cell of ``x``."""
        cells = self.stationary_cells()
        near = np.abs(self.xs - x[0]) <= self.spacing + 1e-12
        near2 = np.abs(self.xs - x[1]) <= self.spacing + 1e-12
        return bool(np.any(cells[np.ix_(near, near2)]))

    def min_in_ball(self, radius: float) -> float:
        """Smallest scanned value with |x| <= radius."""
        x1, x2 = np.meshgrid(self.xs, self.xs, indexing="ij")
        inside = np.hypot(x1, x2) <= radius
        return float(self.values[inside].min())

    def max(self) -> float:
        """Largest scanned value."""
        return float(self.values.max())

    def rows(self) -> list[dict[str, float]]:
        """Landscape rows (c1, c2, phi_hat)."""
        return [{"c1": float(a), "c2": float(b), "phi_hat": float(self.values[i, j])} for i, a in enumerate(self.xs) for j, b in enumerate(self.xs)]


def _reflections(problem: ReducedProblem, autonomous: bool, odd: bool) -> list[tuple[int, int]]:
    """Coordinate sign flips of E2 under which Phi-hat is invariant, closed under composition."""
    flips = {(1, 1)}
    if odd:
        flips.add((-1, -1))
    if autonomous:
        sin = problem.basis.mode_sin[problem.index]
        flips.add((-1 if sin[0] else 1, -1 if sin[1] else 1))
    return sorted({(a[0] * b[0], a[1] * b[1]) for a in flips for b in flips})


def dense_scan(
    problem: ReducedProblem, radius: float, points: int = 401, tol: float | None = None, *, autonomous: bool = False, odd: bool = False
) -> DenseScan:
    """Brute-force Phi-hat over the square [-radius, radius]^2, row by row with warm starts.

    Cells related by a sign flip of the coordinates under which Phi-hat is
    invariant (u -> -u for odd f, time reversal for autonomous f) are solved
    once and copied.
    """
    if problem.dim != 2:
        raise DomainError(f"the dense scan needs dim E2 = 2, got {problem.dim}")
    xs = np.linspace(-radius, radius, points)
    idx = np.arange(points)
    rows, cols = np.meshgrid(idx, idx, indexing="ij")
    flips = _reflections(problem, autonomous, odd)
    flipped = [np.where(s1 > 0, rows, points - 1 - rows) * points + np.where(s2 > 0, cols, points - 1 - cols) for s1, s2 in flips]
    source = np.min(flipped, axis=0)
    own = source == rows * points + cols

    values = np.full((points, points), np.nan)
    h = None
    for i, a in enumerate(xs):
        cells = np.flatnonzero(own[i])
        if cells.size == 0:
            continue
        row = np.column_stack([np.full(cells.size, a), xs[cells]])
        warm = h if h is not None and h.shape[0] == cells.size else None
        values[i, cells], _, out = problem.evaluate(row, warm, tol)
        h = out.h
    values = values.ravel()[source]
    logger.debug("dense scan {}x{} over radius {:.6g} ({} solved): min {:.6g}, max {:.6g}", points, points, radius, int(own.sum()), values.min(), values.max())
    return DenseScan(xs=xs, values=values)
