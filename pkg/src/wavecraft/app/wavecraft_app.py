# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Application management for Wavecraft: one run configuration, four pipelines."""

from collections.abc import Callable
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, TypeVar

import attrs
import numpy as np
from attrs import define, field

from wavecraft.config import RunConfig
from wavecraft.errors import PathCollapseError, UnknownSolutionError, ValidationError, WavecraftError
from wavecraft.spectral.bessel import BesselOrder, interlaces, zeros
from wavecraft.spectral.space import CoefficientField, GridSampling, basis_for, gram_audit, min_radial_nodes, sample_values
from wavecraft.spectral.spectrum import (
    ProblemConfig,
    SpectrumTable,
    Subspace,
    arithmetic_profile,
    enumerate_spectrum,
    gap_audit,
    resonant_pairs,
)
from wavecraft.utils import io, paths
from wavecraft.utils.logger import logger, stage
from wavecraft.variational.critsearch import (
    CriticalPointReport,
    DenseScan,
    GeometryEstimate,
    LevelChain,
    Orbit,
    certify,
    count_distinct,
    dense_scan,
    estimate_geometry,
    find_min_in_ball,
    level_chain,
    local_maxima,
    mountain_pass,
    pairwise_distances,
    symmetry_orbit,
)
from wavecraft.variational.functional import EnergyFunctional, LinearNonlinearity, Nonlinearity, NonlinearityAudit, audit_nonlinearity, build_nonlinearity
from wavecraft.variational.reduction import ReducedProblem, SaddleReduction

T = TypeVar("T")

_GAP_BOX = 10_000
_CLOSED_FORM_BOX = 200
_CLOSED_FORM_PROBLEMS = {1: 1.5, 3: 0.5}  # n -> mu admissible with beta = 6
_RESONANT_FORMS: dict[int, Callable[[int], int] | None] = {
    1: lambda j: 2 * j - 1,
    2: None,
    3: lambda j: 2 * j,
    5: lambda j: 2 * j + 1,
}
_SCAN_AGREEMENT = 1e-4
_MONOTONE_SLACK = 1e-8

SPECTRUM_HEADER = ("j", "k", "gamma_j", "lambda_jk", "resonant", "subspace")
SAMPLE_HEADER = ("t", "r", "u")
LANDSCAPE_HEADER = ("c1", "c2", "phi_hat")


@define(frozen=True)
class SuiteResult:
    """Outcome of one verification suite."""

    name: str
    ok: bool
    details: dict[str, Any] = field(factory=dict)


@define(frozen=True)
class VerifyReport:
    """All suite outcomes of a ``verify`` run."""

    suites: tuple[SuiteResult, ...]

    @property
    def ok(self) -> bool:
        """True when every suite passed."""
        return all(s.ok for s in self.suites)

    @property
    def failed(self) -> list[str]:
        """Names of failing suites."""
        return [s.name for s in self.suites if not s.ok]


@define(frozen=True, eq=False)
class SolveReport:
    """Everything ``solve`` found, in report order."""

    geometry: GeometryEstimate
    solutions: tuple[CriticalPointReport, ...]
    status: dict[str, str]
    chain: LevelChain | None
    distinct_count: int
    nontrivial_count: int
    oracle: dict[str, Any] | None
    unconverged: tuple[CriticalPointReport, ...] = ()


class WavecraftApp:
    """Main application framework for Wavecraft."""

    def __init__(self, config: RunConfig, out_dir: Path) -> None:
        """Bind a run configuration to an output directory (nothing is computed yet)."""
        self.config = config
        self.out_dir = paths.set_out_root(Path(out_dir))

    # -- lazily built problem data ------------------------------------------

    @cached_property
    def problem(self) -> ProblemConfig:
        """Spectral problem of this run."""
        return self.config.problem_config()

    @cached_property
    def table(self) -> SpectrumTable:
        """Validated spectrum; raises ValidationError before any suite or search runs."""
        with stage("spectrum"):
            return enumerate_spectrum(self.problem)

    @cached_property
    def grid(self) -> GridSampling:
        """Quadrature grid of the truncation section."""
        t = self.config.truncation
        return GridSampling.quadrature(self.problem, t.nt, t.nr)

    @cached_property
    def nonlinearity(self) -> Nonlinearity:
        """Configured nonlinearity instance."""
        section = self.config.nonlinearity
        return build_nonlinearity(section.id, dict(section.params), self.problem)

    @cached_property
    def functional(self) -> EnergyFunctional:
        """Phi on the run's basis."""
        return EnergyFunctional(basis_for(self.table, self.grid), self.nonlinearity)

    @cached_property
    def audit(self) -> NonlinearityAudit:
        """Sampled contract checks of the nonlinearity."""
        return audit_nonlinearity(self.nonlinearity, self.table.constants, self.problem)

    @cached_property
    def notch_problem(self) -> ReducedProblem:
        """Phi-hat on the doubled truncation (2 j_max, 2 k_max), where solutions are re-solved for certification."""
        config = self.problem.with_box(2 * self.problem.j_max, 2 * self.problem.k_max)
        table = enumerate_spectrum(config)
        t = self.config.truncation
        nt = max(t.nt, 2 * config.k_max + 2)
        grid = GridSampling.quadrature(config, nt + nt % 2, max(t.nr, min_radial_nodes(table)))
        functional = EnergyFunctional(basis_for(table, grid), self.nonlinearity)
        return ReducedProblem(SaddleReduction(functional, self.config.tolerances.tol_inner, self.config.search.inner_budget))

    @cached_property
    def orbit(self) -> Orbit:
        """Images of a point under the exact symmetries of the discretized Phi."""
        nl = self.nonlinearity
        return symmetry_orbit(self.functional.basis, autonomous=nl.autonomous, odd=bool(self.audit.checks["odd"]))

    def rng(self, stream: int) -> np.random.Generator:
        """Independent generator per consumer, all derived from the run seed."""
        return np.random.default_rng([self.config.search.seed, stream])

    # -- spectrum -----------------------------------------------------------

    def spectrum(self) -> SpectrumTable:
        """Enumerate the spectrum and export spectrum.csv and arithmetic.json."""
        table = self.table
        config = table.config
        io.write_csv(paths.spectrum_csv(), SPECTRUM_HEADER, ([row[h] for h in SPECTRUM_HEADER] for row in table.rows()))
        window = table.sigma()
        payload = {
            "profile": table.profile,
            "constants": table.constants,
            "dims": table.dims(),
            "box_guard": table.guard,
            "resonant_pairs": resonant_pairs(table.profile, config.j_max, config.k_max),
            "gap_audit": gap_audit(table.profile, config.j_max, config.k_max),
            "eigenvalues_between_mu_beta": window[(window > config.mu) & (window < config.beta)],
            "truncation": {"j_max": config.j_max, "k_max": config.k_max},
        }
        io.write_json(paths.arithmetic_json(), payload)
        logger.info("wrote {} spectrum rows to {}", len(table), paths.spectrum_csv())
        return table

    # -- verify -------------------------------------------------------------

    def verify(self) -> VerifyReport:
        """Run every verification suite and export verify.json."""
        table = self.table
        logger.info("verify: {} suites on a {}-mode truncation", len(SUITES), table.dims()["total"])
        results = []
        for index, (name, suite) in enumerate(SUITES.items()):
            with stage(f"verify:{name}"):
                try:
                    ok, details = suite(self, self.rng(100 + index))
                except WavecraftError as exc:
                    logger.error("suite {} raised {}: {}", name, type(exc).__name__, exc)
                    ok, details = False, {"error": f"{type(exc).__name__}: {exc}"}
            if not ok:
                logger.warning("suite {} failed", name)
            results.append(SuiteResult(name=name, ok=bool(ok), details=details))
        report = VerifyReport(suites=tuple(results))
        io.write_json(paths.verify_json(), {"ok": report.ok, "failed": report.failed, "suites": {s.name: {"ok": s.ok, "details": s.details} for s in results}})
        return report

    # -- solve --------------------------------------------------------------

    def _attempt(self, status: dict[str, str], key: str, action: Callable[[], T]) -> T | None:
        try:
            return action()
        except WavecraftError as exc:
            logger.error("{} failed: {}", key, exc)
            status[key] = f"failed: {exc}"
            return None

    def solve(self) -> SolveReport:
        """Geometry, the three searches, the dense oracle and certification; exports every artifact.

        Search failures become status flags; whatever was found is still written.
        Points whose polish stopped above ``tol_outer`` are listed apart under
        ``unconverged`` and are neither sampled nor counted.

        Raises:
            ValidationError: when the nonlinearity fails its audit.
        """
        self.audit.require()
        search, tol = self.config.search, self.config.tolerances
        functional = self.functional
        problem = ReducedProblem(SaddleReduction(functional, tol.tol_inner, search.inner_budget))
        rng = self.rng(0)
        symmetric = self.nonlinearity.autonomous and self.audit.checks["odd"]
        status: dict[str, str] = {}

        with stage("geometry"):
            geometry = estimate_geometry(
                problem,
                rng=rng,
                ring_directions=search.ring_directions,
                radius_samples=search.radius_samples,
                r_max=search.r_max,
                symmetric=symmetric,
            )
        status["geometry"] = "ok" if geometry.ok else f"failed: {geometry.failure}"

        common = {"tol_outer": tol.tol_outer, "budget": search.outer_budget}
        with stage("min_in_ball"):
            minimum = self._attempt(status, "min_in_ball", lambda: find_min_in_ball(geometry, problem, rng=rng, starts=search.starts, **common))
        if minimum is not None:
            status["min_in_ball"] = minimum.status

        box = geometry.R0 if geometry.R0 is not None else search.r_max
        with stage("global_max"):
            maxima = self._attempt(
                status,
                "global_max",
                lambda: local_maxima(problem, box, rng=rng, starts=search.starts, distinct=tol.distinct, orbit=self.orbit, **common),
            )
        maxima = maxima or []
        maximum = maxima[0] if maxima else None
        if maximum is not None:
            status["global_max"] = "failed: unbounded ascent" if maximum.status == "boundary" else maximum.status

        passes = self._mountain_passes(problem, geometry, maximum, rng, status)

        found = [r for r in [minimum, *maxima, *passes] if r is not None]
        solutions = tuple(r for r in found if r.converged)
        unconverged = tuple(r for r in found if not r.converged)
        for r in unconverged:
            logger.warning("{} stopped at |grad| = {:.3e} ({}); it is not reported as a solution", r.kind, r.reduced_grad_norm, r.status)
        oracle = None
        if problem.dim == 2:
            flags = {"autonomous": self.nonlinearity.autonomous, "odd": bool(self.audit.checks["odd"])}
            with stage("dense_scan"):
                scan = self._attempt(status, "dense_scan", lambda: dense_scan(problem, box, search.scan_points, tol.tol_scan, **flags))
            if scan is not None:
                io.write_csv(paths.landscape_csv(), LANDSCAPE_HEADER, ((row["c1"], row["c2"], row["phi_hat"]) for row in scan.rows()))
                solutions = tuple(attrs.evolve(r, scan_match=scan.matches(r.x)) for r in solutions)
                oracle = self._oracle(scan, geometry, minimum, maximum)
        else:
            logger.warning("dim E2 = {}: the dense-scan oracle only runs for dim E2 = 2", problem.dim)

        with stage("certify"):
            fine = self._attempt(status, "notch", lambda: self.notch_problem)
            solutions = tuple(certify(r, functional, fine, tol_outer=tol.tol_outer) for r in solutions)

        def find(kind: str) -> CriticalPointReport | None:
            return next((r for r in solutions if r.kind == kind), None)

        # The chain takes c+ from whichever side converged, the + side first.
        crossings = sorted((r for r in solutions if r.kind == "mountain_pass"), key=lambda r: -r.side)
        pass_plus = crossings[0] if crossings else None
        pass_minus = crossings[1] if len(crossings) > 1 else None
        low, high = find("min_in_ball"), find("global_max")
        chain = None
        if low is not None and high is not None:
            chain = level_chain(low, high, geometry, pass_plus, pass_minus)
        weights = functional.basis.e_weights
        distinct = count_distinct(list(solutions), weights, tol.distinct, orbit=self.orbit)
        nontrivial = count_distinct(list(solutions), weights, tol.distinct, orbit=self.orbit, nontrivial=True)
        report = SolveReport(
            geometry=geometry,
            solutions=solutions,
            status=status,
            chain=chain,
            distinct_count=distinct,
            nontrivial_count=nontrivial,
            oracle=oracle,
            unconverged=unconverged,
        )
        headline = [r for r in (low, high, pass_plus) if r is not None]
        self._write_solutions(report, headline, weights)
        for index, solution in enumerate(solutions):
            self._write_sample(index, solution.point)
        logger.info("solve: {} critical points, {} distinct ({} nontrivial)", len(solutions), distinct, nontrivial)
        return report

    def _mountain_passes(
        self,
        problem: ReducedProblem,
        geometry: GeometryEstimate,
        maximum: CriticalPointReport | None,
        rng: np.random.Generator,
        status: dict[str, str],
    ) -> list[CriticalPointReport]:
        search, tol = self.config.search, self.config.tolerances
        if not geometry.ok:
            status["mountain_pass_plus"] = "skipped: geometry failure"
            return []

        u0 = rng.standard_normal(problem.dim)
        u0 /= np.linalg.norm(u0)
        found: list[CriticalPointReport] = []
        for side, key in ((1, "mountain_pass_plus"), (-1, "mountain_pass_minus")):
            if side < 0 and any(r.converged for r in found) and not search.two_sided:
                break
            with stage(key):
                try:
                    report = mountain_pass(
                        side * u0,
                        geometry,
                        problem,
                        nodes=search.path_nodes,
                        budget=search.path_budget,
                        tol_outer=tol.tol_outer,
                        maximizer=None if maximum is None else maximum.point,
                        orbit=self.orbit,
                        distinct=tol.distinct,
                        side=side,
                    )
                except PathCollapseError as exc:
                    logger.warning("{}: {}", key, exc)
                    status[key] = f"collapsed: {exc}"
                    continue
                except WavecraftError as exc:
                    logger.error("{} failed: {}", key, exc)
                    status[key] = f"failed: {exc}"
                    continue
            status[key] = report.status
            found.append(report)
        return found

    def _oracle(
        self,
        scan: DenseScan,
        geometry: GeometryEstimate,
        minimum: CriticalPointReport | None,
        maximum: CriticalPointReport | None,
    ) -> dict[str, Any]:
        out: dict[str, Any] = {"points": int(len(scan.xs)), "spacing": scan.spacing, "scan_max": scan.max()}
        if minimum is not None:
            radius = geometry.r_bar if geometry.r_bar is not None else float(scan.xs[-1])
            out["scan_min_in_ball"] = scan.min_in_ball(radius)
            out["sigma1_agrees"] = abs(minimum.phi_hat - out["scan_min_in_ball"]) <= _SCAN_AGREEMENT
        if maximum is not None:
            out["sigma2_agrees"] = abs(maximum.phi_hat - out["scan_max"]) <= _SCAN_AGREEMENT
        return out

    @staticmethod
    def _entry(r: CriticalPointReport, weights: np.ndarray) -> dict[str, Any]:
        return {
            "kind": r.kind,
            "side": r.side,
            "status": r.status,
            "trivial": r.trivial,
            "phi_hat": r.phi_hat,
            "reduced_grad_norm": r.reduced_grad_norm,
            "inner_residual": r.inner_residual,
            "iterations": r.iterations,
            "weak_residual": r.weak_residual,
            "lifted_residual": r.lifted_residual,
            "notch_residual": r.notch_residual,
            "notch_shift": r.notch_shift,
            "residual_decays": r.residual_decays,
            "full_grad_norm": r.full_grad_norm,
            "scan_match": r.scan_match,
            "e_norm": float(np.sqrt(np.sum(weights * r.point**2))),
            "x": r.x,
            "coefficients": r.point,
            "history": r.history,
        }

    def _write_solutions(self, report: SolveReport, headline: list[CriticalPointReport], weights: np.ndarray) -> None:
        entries = [{"id": index, **self._entry(r, weights)} for index, r in enumerate(report.solutions)]
        payload = {
            "config": {
                "problem": self.config.problem,
                "nonlinearity": self.config.nonlinearity,
                "truncation": self.config.truncation,
                "tolerances": self.config.tolerances,
                "search": self.config.search,
            },
            "geometry": report.geometry,
            "status": report.status,
            "solutions": entries,
            "unconverged": [self._entry(r, weights) for r in report.unconverged],
            "level_chain": report.chain,
            "distinct_count": report.distinct_count,
            "nontrivial_count": report.nontrivial_count,
            "distances": pairwise_distances(headline, weights) if headline else [],
            "oracle": report.oracle,
        }
        io.write_json(paths.solutions_json(), payload)

    # -- sample -------------------------------------------------------------

    def _write_sample(self, solution_id: int, coeffs: np.ndarray) -> Path:
        t = self.config.truncation
        u = CoefficientField(basis_for(self.table, self.grid), coeffs)
        ts, rs, values = sample_values(u, t.nt + 1, t.nr + 1)
        tt, rr = np.meshgrid(ts, rs, indexing="ij")
        return io.write_csv(paths.sample_csv(solution_id), SAMPLE_HEADER, zip(tt.ravel(), rr.ravel(), values.ravel(), strict=True))

    def sample(self, solution_id: int) -> Path:
        """Write the (t, r, u) grid of one solution reported by the last ``solve`` in this output directory."""
        source = paths.solutions_json()
        if not source.exists():
            raise UnknownSolutionError(f"no {source.name} in {self.out_dir}; run 'solve' first")
        entries = io.read_json(source)["solutions"]
        entry = next((e for e in entries if e["id"] == solution_id), None)
        if entry is None:
            known = ", ".join(str(e["id"]) for e in entries) or "none"
            raise UnknownSolutionError(f"unknown solution id {solution_id} (known: {known})")
        coeffs = np.asarray(entry["coefficients"], dtype=np.float64)
        size = basis_for(self.table, self.grid).size
        if coeffs.shape != (size,):
            raise ValidationError(f"solution {solution_id} has {coeffs.size} coefficients, this truncation has {size}")
        path = self._write_sample(solution_id, coeffs)
        logger.info("wrote {}", path)
        return path


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------

Suite = Callable[[WavecraftApp, np.random.Generator], tuple[bool, dict[str, Any]]]


def _suite_bessel(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    ok = True
    details: dict[str, Any] = {}
    for nu in sorted({-0.5, 0.0, 0.5, 1.0, 1.5, app.problem.order.nu}):
        order = BesselOrder(nu)
        table = zeros(order, 50)
        audit = table.audit()
        closed = [abs(table.gamma(j) - c) for j in range(1, 51) if (c := order.closed_form_zero(j)) is not None]
        closed_error = max(closed) if closed else 0.0
        interlacing = interlaces(order, 20)
        details[f"nu={nu:g}"] = {**audit, "closed_form_error": closed_error, "interlaces": interlacing}
        ok = ok and bool(audit["ok"]) and interlacing and closed_error <= 1e-12
    return ok, details


def _suite_gap_audit(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    ok = True
    details: dict[str, Any] = {}
    standard = (Fraction(1, 2), Fraction(2))
    cases = list(dict.fromkeys([*((n, *standard) for n in _RESONANT_FORMS), (app.problem.n, app.problem.R_coef, app.problem.T_coef)]))
    for n, r_coef, t_coef in cases:
        profile = arithmetic_profile(attrs.evolve(app.problem, n=n, R_coef=r_coef, T_coef=t_coef))
        report = gap_audit(profile, _GAP_BOX, _GAP_BOX)
        pairs = resonant_pairs(profile, _GAP_BOX, _GAP_BOX)
        matches = True
        if (r_coef, t_coef) == standard and n in _RESONANT_FORMS:
            form = _RESONANT_FORMS[n]
            expected = [] if form is None else [(j, form(j)) for j in range(1, _GAP_BOX + 1) if form(j) <= _GAP_BOX]
            matches = pairs == expected
        consistent = report.resonant_count == len(pairs)
        details[f"n={n},R={r_coef},T={t_coef}"] = {
            "ok": report.ok,
            "resonant_count": report.resonant_count,
            "min_gap": report.min_gap,
            "bound": report.bound,
            "closed_form_match": matches,
        }
        ok = ok and report.ok and matches and consistent
    return ok, details


def _suite_closed_form_spectrum(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    ok = True
    details: dict[str, Any] = {}
    box = _CLOSED_FORM_BOX
    for n, mu in _CLOSED_FORM_PROBLEMS.items():
        config = ProblemConfig(n=n, R_coef=Fraction(1, 2), T_coef=Fraction(2), mu=mu, beta=6.0, eta=0.5, j_max=box, k_max=box)
        table = enumerate_spectrum(config)
        jj, kk = np.meshgrid(np.arange(1, box + 1), np.arange(box + 1), indexing="ij")
        radial = (2 * jj - 1) ** 2 if n == 1 else (2 * jj) ** 2
        expected = (radial - kk**2).ravel().astype(np.float64)
        table_error = float(np.max(np.abs(table.lam - expected)))
        zero_error = float(np.max(np.abs((table.zeros.zeros / config.R) ** 2 - radial[:, 0])))
        details[f"n={n}"] = {"table_error": table_error, "zero_error": zero_error}
        ok = ok and table_error <= 1e-10 and zero_error <= 1e-10 * box**2
    return ok, details


def _suite_gram(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    deviation = gram_audit(app.functional.basis)
    return deviation <= 1e-8, {"max_deviation": deviation, "size": app.functional.basis.size}


def _suite_quadratic_forms(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    constants = app.table.constants
    basis = app.functional.basis
    mu, beta = Fraction(app.problem.mu), Fraction(app.problem.beta)
    beta_minus, beta_plus = Fraction(constants.beta_minus), Fraction(constants.beta_plus)
    gamma1 = min(Fraction(1), beta / beta_minus - 1) if beta_minus > 0 else Fraction(1)
    gamma2 = 1 - beta / (beta_plus - mu)
    shift = [Fraction(x) - mu for x in basis.lam]
    low = np.flatnonzero(basis.mask(Subspace.E1) | basis.mask(Subspace.E2))
    high = np.flatnonzero(basis.mask(Subspace.E3))

    violations = 0
    for _ in range(200):
        for index, upper in ((low, True), (high, False)):
            coeffs = [Fraction(float(a)) for a in rng.standard_normal(len(index))]
            form = sum((shift[m] - beta) * a * a for m, a in zip(index, coeffs, strict=True))
            energy = sum(abs(shift[m]) * a * a for m, a in zip(index, coeffs, strict=True))
            holds = form <= -gamma1 * energy if upper else form >= gamma2 * energy
            violations += not holds
    return violations == 0, {"gamma1": gamma1, "gamma2": gamma2, "samples": 400, "violations": violations}


def _suite_nonlinearity(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    audit = app.audit
    return audit.ok, {"checks": audit.checks, "worst": audit.worst}


def _random_pair(rng: np.random.Generator, size: int, scale: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    c = scale * rng.standard_normal(size)
    v = rng.standard_normal(size)
    return c, v / np.linalg.norm(v)


def _suite_gradient_fd(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    functional, step = app.functional, 1e-5
    worst = 0.0
    for _ in range(20):
        c, v = _random_pair(rng, functional.basis.size)
        exact = float(functional.gradient(c) @ v)
        fd = (float(functional.energy(c + step * v)) - float(functional.energy(c - step * v))) / (2 * step)
        worst = max(worst, abs(fd - exact) / max(abs(exact), 1.0))
    return worst <= 1e-6, {"worst_relative_error": worst, "samples": 20, "step": step}


def _suite_hessian_fd(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    functional, step = app.functional, 1e-5
    worst = 0.0
    for _ in range(10):
        c, v = _random_pair(rng, functional.basis.size)
        exact = float(functional.hessian(c, v))
        fd = float((functional.gradient(c + step * v) - functional.gradient(c - step * v)) @ v) / (2 * step)
        worst = max(worst, abs(fd - exact) / max(abs(exact), 1.0))
    return worst <= 1e-5, {"worst_relative_error": worst, "samples": 10, "step": step}


def _suite_monotonicity(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    functional = app.functional
    basis = functional.basis
    gamma = app.table.constants.gamma
    e1, e2, e3 = (basis.mask(s) for s in (Subspace.E1, Subspace.E2, Subspace.E3))
    samples = 200
    worst: dict[str, float] = {}
    ok = True
    for name, base, moving, sign in (("E1", e2 | e3, e1, -1.0), ("E3", e1 | e2, e3, 1.0)):
        if not moving.any():
            continue
        u = np.where(base, 0.5 * rng.standard_normal((samples, basis.size)), 0.0)
        v = np.where(moving, 0.5 * rng.standard_normal((samples, basis.size)), 0.0)
        w = np.where(moving, 0.5 * rng.standard_normal((samples, basis.size)), 0.0)
        d = v - w
        pairing = np.sum((functional.gradient(u + v) - functional.gradient(u + w)) * d, axis=1)
        bound = gamma * np.sum(basis.e_weights * d * d, axis=1)
        # E1 side must sit below -bound, E3 side above +bound.
        ratio = sign * pairing / bound
        worst[name] = float(ratio.min())
        ok = ok and bool(np.all(ratio >= 1.0 - _MONOTONE_SLACK))
    return ok, {"gamma": gamma, "samples": samples, "worst_ratio": worst}


def _suite_reduction(app: WavecraftApp, rng: np.random.Generator) -> tuple[bool, dict[str, Any]]:
    tol = app.config.tolerances.tol_inner
    basis = app.functional.basis
    e2 = basis.mask(Subspace.E2)
    details: dict[str, Any] = {}

    slope = min(1.0, 0.5 * (app.table.constants.mu0 - app.problem.eta))
    linear = SaddleReduction(EnergyFunctional(basis, LinearNonlinearity(c=slope, eta=app.problem.eta)), tol)
    linear_error, linear_h = 0.0, 0.0
    for _ in range(5):
        x = np.where(e2, rng.standard_normal(basis.size), 0.0)
        ev = linear.solve(CoefficientField(basis, x))
        closed = 0.5 * float(np.sum((basis.shift - slope) * x * x))
        linear_error = max(linear_error, abs(ev.phi_hat - closed))
        linear_h = max(linear_h, ev.h.e_norm)
    details["linear_oracle"] = {"phi_hat_error": linear_error, "h_norm": linear_h}

    reduction = SaddleReduction(app.functional, tol, app.config.search.inner_budget)
    mode = int(np.flatnonzero(e2 & ~basis.mode_sin)[0])
    u = CoefficientField(basis, np.where(np.arange(basis.size) == mode, 0.2, 0.0))
    first = reduction.solve(u)
    tighter = reduction.solve(u, tol=tol / 10)
    h0 = CoefficientField(basis, np.where(reduction.e13, 1e-2 * rng.standard_normal(basis.size), 0.0))
    restarted = reduction.solve(u, h0)
    stability = abs(first.phi_hat - tighter.phi_hat)
    uniqueness = (first.h - restarted.h).e_norm

    direction = np.where(e2, rng.standard_normal(basis.size), 0.0)
    direction = CoefficientField(basis, direction / np.linalg.norm(direction))
    step = 1e-4
    exact = first.reduced_grad.dot(direction)
    plus = reduction.solve(u + direction * step, first.h).phi_hat
    minus = reduction.solve(u - direction * step, first.h).phi_hat
    fd_error = abs((plus - minus) / (2 * step) - exact) / max(abs(exact), 1.0)
    details["reference"] = {
        "inner_residual": first.inner_residual,
        "iterations": first.iterations,
        "nonmonotone_sweeps": first.nonmonotone,
        "stability": stability,
        "uniqueness": uniqueness,
        "fd_relative_error": fd_error,
    }
    ok = (
        linear_error <= 1e-10
        and linear_h == 0.0
        and first.inner_residual <= 1e-8
        and stability <= 1e-8
        and uniqueness <= 10 * tol
        and fd_error <= 1e-5
    )
    return ok, details


SUITES: dict[str, Suite] = {
    "bessel": _suite_bessel,
    "gap_audit": _suite_gap_audit,
    "closed_form_spectrum": _suite_closed_form_spectrum,
    "gram": _suite_gram,
    "quadratic_forms": _suite_quadratic_forms,
    "nonlinearity": _suite_nonlinearity,
    "gradient_fd": _suite_gradient_fd,
    "hessian_fd": _suite_hessian_fd,
    "monotonicity": _suite_monotonicity,
    "reduction": _suite_reduction,
}
