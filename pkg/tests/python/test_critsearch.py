import attrs
import numpy as np
import pytest

from wavecraft.errors import DomainError, GeometryError, PathCollapseError
from wavecraft.spectral.space import Basis, GridSampling, basis_for
from wavecraft.spectral.spectrum import ProblemConfig, enumerate_spectrum
from wavecraft.variational.critsearch import (
    CriticalKind,
    CriticalPointReport,
    DenseScan,
    GeometryEstimate,
    certify,
    count_distinct,
    dense_scan,
    estimate_geometry,
    find_global_max,
    find_min_in_ball,
    level_chain,
    local_maxima,
    mountain_pass,
    orbit_distance,
    symmetry_orbit,
)
from wavecraft.variational.functional import ArctanNonlinearity, EnergyFunctional, LinearNonlinearity, ZeroNonlinearity
from wavecraft.variational.reduction import ReducedProblem, SaddleReduction


@pytest.fixture(scope="module")
def zero_problem(reference_basis: Basis) -> ReducedProblem:
    return ReducedProblem(SaddleReduction(EnergyFunctional(reference_basis, ZeroNonlinearity())))


@pytest.fixture(scope="module")
def concave_problem(reference_basis: Basis) -> ReducedProblem:
    # f = 4 u pushes lambda - mu - c below zero on E2, so Phi-hat < 0 away from the origin.
    return ReducedProblem(SaddleReduction(EnergyFunctional(reference_basis, LinearNonlinearity(c=4.0, eta=0.5))))


@pytest.fixture(scope="module")
def doubled_problem(reference_config: ProblemConfig, arctan: ArctanNonlinearity) -> ReducedProblem:
    config = reference_config.with_box(2 * reference_config.j_max, 2 * reference_config.k_max)
    basis = basis_for(enumerate_spectrum(config), GridSampling.quadrature(config, nt=66, nr=40))
    return ReducedProblem(SaddleReduction(EnergyFunctional(basis, arctan), tol_inner=1e-9))


@pytest.fixture(scope="module")
def reference_search(reduced_problem: ReducedProblem) -> tuple[GeometryEstimate, CriticalPointReport, CriticalPointReport]:
    rng = np.random.default_rng(7)
    geometry = estimate_geometry(reduced_problem, rng=rng, ring_directions=8, radius_samples=24, r_max=48.0, symmetric=True)
    minimum = find_min_in_ball(geometry, reduced_problem, rng=rng, starts=3)
    maximum = find_global_max(reduced_problem, geometry.R0, rng=rng, starts=3)
    return geometry, minimum, maximum


def _fake_report(phi_hat: float, x: tuple[float, float] = (0.0, 0.0)) -> CriticalPointReport:
    point = np.zeros(4)
    point[:2] = x
    return CriticalPointReport(
        kind=CriticalKind.MOUNTAIN_PASS,
        x=np.asarray(x),
        u2=point,
        h=np.zeros(4),
        phi_hat=phi_hat,
        reduced_grad_norm=0.0,
        inner_residual=0.0,
        iterations=1,
        trivial=False,
    )


def _geometry(tau: float | None) -> GeometryEstimate:
    return GeometryEstimate(
        r_bar=1.0,
        tau=tau,
        R0=2.0,
        M_hat=3.0,
        b_hat=0.0,
        radii=(1.0, 2.0),
        ring_min=(1.0, -1.0),
        ring_max=(1.0, -1.0),
        directions=4,
        symmetric=True,
    )


def test_quadratic_landscape_has_no_r0(zero_problem: ReducedProblem, rng: np.random.Generator) -> None:
    geometry = estimate_geometry(zero_problem, rng=rng, ring_directions=8, radius_samples=8, r_max=10.0)
    assert not geometry.ok
    assert geometry.R0 is None
    assert geometry.r_bar == 10.0
    assert geometry.tau == pytest.approx(50.0)
    assert geometry.b_hat == 0.0
    with pytest.raises(GeometryError, match="r_max = 10"):
        geometry.require()
    with pytest.raises(GeometryError):
        mountain_pass(np.array([1.0, 0.0]), geometry, zero_problem)


def test_quadratic_landscape_minimum_is_trivial(zero_problem: ReducedProblem, rng: np.random.Generator) -> None:
    geometry = estimate_geometry(zero_problem, rng=rng, ring_directions=8, radius_samples=8, r_max=10.0)
    report = find_min_in_ball(geometry, zero_problem, rng=rng, starts=3)
    assert report.kind == CriticalKind.MIN_IN_BALL
    assert report.trivial
    assert report.status == "ok"
    assert report.phi_hat == 0.0
    certified = certify(report, zero_problem.reduction.functional)
    assert certified.weak_residual == 0.0
    assert certified.full_grad_norm == 0.0
    assert certified.notch_residual is None


def test_unbounded_ascent_is_flagged(zero_problem: ReducedProblem, rng: np.random.Generator) -> None:
    maxima = local_maxima(zero_problem, 10.0, rng=rng, starts=2)
    assert len(maxima) == 1
    assert maxima[0].status == "boundary"
    assert np.linalg.norm(maxima[0].x) == pytest.approx(10.0)
    best = find_global_max(zero_problem, 10.0, rng=rng, starts=2)
    assert best.status == "boundary"


def test_dense_scan_needs_a_plane(reference_config: ProblemConfig) -> None:
    config = ProblemConfig(n=1, R_coef=reference_config.R_coef, T_coef=reference_config.T_coef, mu=0.25, beta=8.5, eta=0.5, j_max=10, k_max=18)
    table = enumerate_spectrum(config)
    basis = Basis(table, GridSampling.quadrature(config, nt=40, nr=40))
    problem = ReducedProblem(SaddleReduction(EnergyFunctional(basis, ZeroNonlinearity())))
    assert problem.dim == 5
    with pytest.raises(DomainError, match="dim E2 = 2"):
        dense_scan(problem, 1.0, points=5)


def test_dense_scan_of_the_reference_landscape(reduced_problem: ReducedProblem) -> None:
    scan = dense_scan(reduced_problem, 20.0, points=11)
    assert scan.values.shape == (11, 11)
    assert scan.values[5, 5] == pytest.approx(0.0, abs=1e-12)
    assert scan.min_in_ball(5.0) == pytest.approx(0.0, abs=1e-12)
    assert scan.max() > 0
    assert scan.matches(np.zeros(2))
    assert len(scan.rows()) == 121


def test_stationary_cells_of_a_paraboloid() -> None:
    xs = np.linspace(-1.0, 1.0, 21)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    scan = DenseScan(xs=xs, values=x1**2 + x2**2)
    assert scan.spacing == pytest.approx(0.1)
    assert scan.matches(np.zeros(2))
    assert not scan.matches(np.array([0.8, 0.8]))
    assert scan.min_in_ball(0.5) == 0.0
    assert scan.max() == pytest.approx(2.0)
    cells = scan.stationary_cells()
    assert not cells[0].any() and not cells[:, -1].any()


def test_level_chain_ordering() -> None:
    minimum, maximum = _fake_report(0.0), _fake_report(3.0)
    chain = level_chain(minimum, maximum, _geometry(1.0), _fake_report(2.0))
    assert chain.holds and chain.strict_upper
    assert chain.phi_hat_zero == 0.0

    flat = level_chain(minimum, maximum, _geometry(1.0), _fake_report(3.0))
    assert flat.holds and not flat.strict_upper

    assert not level_chain(minimum, maximum, _geometry(1.0), _fake_report(0.5)).holds
    assert not level_chain(minimum, maximum, _geometry(None), _fake_report(2.0)).holds
    assert not level_chain(_fake_report(-1.0), _fake_report(0.5), _geometry(1.0), None).holds


def test_count_distinct_clusters_nearby_points() -> None:
    reports = [_fake_report(1.0, (1.0, 0.0)), _fake_report(1.0, (1.0, 1e-6)), _fake_report(1.0, (0.0, 1.0))]
    assert count_distinct(reports, np.ones(4), 1e-3) == 2
    assert count_distinct([], np.ones(4), 1e-3) == 0


def test_count_distinct_skips_unconverged_and_trivial_points() -> None:
    good = _fake_report(1.0, (1.0, 0.0))
    stalled = attrs.evolve(_fake_report(1.0, (0.0, 1.0)), status="not_converged")
    zero = attrs.evolve(_fake_report(0.0), trivial=True)
    assert count_distinct([good, stalled], np.ones(4), 1e-3) == 1
    assert count_distinct([zero, good], np.ones(4), 1e-3) == 2
    assert count_distinct([zero, good], np.ones(4), 1e-3, nontrivial=True) == 1


def test_count_distinct_modulo_a_symmetry() -> None:
    reports = [_fake_report(1.0, (1.0, 0.0)), _fake_report(1.0, (-1.0, 0.0)), _fake_report(1.0, (0.0, 1.0))]
    assert count_distinct(reports, np.ones(4), 1e-3) == 3
    assert count_distinct(reports, np.ones(4), 1e-3, orbit=lambda p: np.stack([p, -p])) == 2


def test_level_chain_without_a_pass_level_does_not_hold() -> None:
    chain = level_chain(_fake_report(0.0), _fake_report(3.0), _geometry(1.0), None)
    assert chain.c_plus is None
    assert not chain.holds
    assert not chain.strict_upper


def test_symmetry_orbit_preserves_the_energy(reference_basis: Basis, reference_functional: EnergyFunctional, rng: np.random.Generator) -> None:
    orbit = symmetry_orbit(reference_basis, autonomous=True, odd=True)
    point = 0.5 * rng.standard_normal(reference_basis.size)
    images = orbit(point)
    assert images.shape == (4 * reference_basis.grid.nt, reference_basis.size)
    np.testing.assert_array_equal(images[0], point)
    energies = np.asarray(reference_functional.energy(images))
    np.testing.assert_allclose(energies, energies[0], rtol=1e-10, atol=1e-12)

    weights = reference_basis.e_weights
    shifted = reference_basis.time_shift(-point, 3 * reference_basis.grid.T / reference_basis.grid.nt)
    assert orbit_distance(point, shifted, weights, orbit) == pytest.approx(0.0, abs=1e-10)
    assert orbit_distance(point, shifted, weights) > 1.0
    assert symmetry_orbit(reference_basis, autonomous=False, odd=False)(point).shape == (1, reference_basis.size)


def test_symmetric_dense_scan_matches_the_full_scan(reduced_problem: ReducedProblem) -> None:
    full = dense_scan(reduced_problem, 20.0, points=11)
    folded = dense_scan(reduced_problem, 20.0, points=11, autonomous=True, odd=True)
    np.testing.assert_allclose(folded.values, full.values, rtol=1e-8, atol=1e-8)
    np.testing.assert_allclose(folded.values, folded.values[::-1, ::-1])


def test_string_without_a_barrier_collapses(concave_problem: ReducedProblem) -> None:
    with pytest.raises(PathCollapseError, match="rises above"):
        mountain_pass(np.array([0.6, 0.8]), _geometry(1.0), concave_problem, nodes=6, budget=3)


def test_trivial_point_certifies_with_zero_residual(
    reduced_problem: ReducedProblem, reference_functional: EnergyFunctional, doubled_problem: ReducedProblem
) -> None:
    size = reduced_problem.basis.size
    zero = CriticalPointReport(
        kind=CriticalKind.MIN_IN_BALL,
        x=np.zeros(2),
        u2=np.zeros(size),
        h=np.zeros(size),
        phi_hat=0.0,
        reduced_grad_norm=0.0,
        inner_residual=0.0,
        iterations=1,
        trivial=True,
    )
    certified = certify(zero, reference_functional, doubled_problem)
    assert certified.weak_residual == 0.0
    assert certified.lifted_residual == 0.0
    assert certified.notch_residual == 0.0
    assert certified.notch_shift == 0.0
    assert certified.residual_decays


@pytest.mark.slow
def test_reference_critical_points(
    reduced_problem: ReducedProblem,
    reference_functional: EnergyFunctional,
    reference_search: tuple[GeometryEstimate, CriticalPointReport, CriticalPointReport],
) -> None:
    geometry, minimum, maximum = reference_search
    assert geometry.ok
    assert 0 < geometry.r_bar < geometry.R0
    assert geometry.tau > 0
    assert geometry.M_hat >= geometry.tau

    assert minimum.phi_hat <= 1e-12
    assert np.linalg.norm(minimum.x) <= 1e-4

    assert maximum.status == "ok"
    assert maximum.phi_hat >= geometry.tau
    assert maximum.reduced_grad_norm <= 1e-6
    assert certify(maximum, reference_functional).weak_residual <= 1e-5

    u0 = np.array([-maximum.x[1], maximum.x[0]])
    passage = mountain_pass(u0, geometry, reduced_problem, nodes=16, budget=200, maximizer=maximum.point)
    assert passage.kind == CriticalKind.MOUNTAIN_PASS
    assert passage.status == "ok"
    assert passage.reduced_grad_norm <= 1e-6

    chain = level_chain(minimum, maximum, geometry, passage)
    assert chain.holds
    # Phi-hat is nearly rotation invariant on E2; only grid aliasing separates c+ from sigma2.
    assert chain.c_plus == pytest.approx(chain.sigma2, rel=0.05)


@pytest.mark.slow
def test_search_histories_are_monotone(reference_search: tuple[GeometryEstimate, CriticalPointReport, CriticalPointReport]) -> None:
    _, minimum, maximum = reference_search
    assert np.all(np.diff(minimum.history) <= 1e-10)
    assert len(maximum.history) > 1
    assert np.all(np.diff(maximum.history) >= -1e-8)


@pytest.mark.slow
def test_mountain_pass_from_a_random_direction(
    reduced_problem: ReducedProblem, reference_search: tuple[GeometryEstimate, CriticalPointReport, CriticalPointReport]
) -> None:
    geometry, _, maximum = reference_search
    u0 = np.random.default_rng(11).standard_normal(2)
    passage = mountain_pass(u0, geometry, reduced_problem, nodes=24, budget=400, maximizer=maximum.point)
    assert passage.status == "ok"
    assert passage.reduced_grad_norm <= 1e-6
    assert np.linalg.norm(passage.x) < geometry.R0
    assert geometry.tau - 1e-7 <= passage.phi_hat < maximum.phi_hat


@pytest.mark.slow
def test_residual_decays_in_the_doubled_truncation(
    reference_functional: EnergyFunctional,
    doubled_problem: ReducedProblem,
    reference_search: tuple[GeometryEstimate, CriticalPointReport, CriticalPointReport],
) -> None:
    _, _, maximum = reference_search
    certified = certify(maximum, reference_functional, doubled_problem)
    assert certified.lifted_residual > 0
    assert certified.notch_residual < certified.lifted_residual
    assert certified.residual_decays
    assert np.isfinite(certified.notch_shift)
