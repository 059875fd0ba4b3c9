import math

import numpy as np
import pytest

from wavecraft.errors import ConvergenceError, DomainError, MonotonicityError
from wavecraft.spectral.space import Basis, CoefficientField, Mode, Parity
from wavecraft.spectral.spectrum import Subspace
from wavecraft.variational.functional import ArctanNonlinearity, EnergyFunctional, LinearNonlinearity
from wavecraft.variational.reduction import ReducedProblem, SaddleReduction, phi_hat_and_grad, solve_h


def _e2_field(basis: Basis, a: float, b: float) -> CoefficientField:
    return basis.unit(Mode(2, 2, Parity.COS), a) + basis.unit(Mode(2, 2, Parity.SIN), b)


def test_h_vanishes_at_zero(reduction: SaddleReduction, reference_basis: Basis) -> None:
    out = reduction.solve(reference_basis.zeros())
    assert not np.any(out.h.coeffs)
    assert out.phi_hat == 0.0
    assert out.iterations == 0


def test_linear_reduction_has_closed_form(reference_basis: Basis) -> None:
    u = _e2_field(reference_basis, 1.5, -0.5)
    out = solve_h(u, LinearNonlinearity(c=2.0), reference_basis.grid)
    np.testing.assert_allclose(out.h.coeffs, 0.0, atol=1e-12)
    # Phi-hat(u) = (lambda - mu - c) |u|^2 / 2 with lambda - mu = 3.5
    assert out.phi_hat == pytest.approx(0.5 * 1.5 * (1.5**2 + 0.5**2), rel=1e-10)
    np.testing.assert_allclose(out.reduced_grad.coeffs, 1.5 * u.coeffs, atol=1e-10)


def test_reduction_solves_the_complement_equation(reduction: SaddleReduction, reference_basis: Basis) -> None:
    u = _e2_field(reference_basis, 4.0, 1.0)
    out = reduction.solve(u)
    assert out.inner_residual <= 1e-9
    assert out.iterations > 0
    assert out.h.support("E1+E3")
    assert out.reduced_grad.support("E2")
    g = reduction.functional.gradient(out.point.coeffs)
    e13 = reference_basis.mask("E1+E3")
    assert math.sqrt(float(np.sum(g[e13] ** 2 / reference_basis.e_weights[e13]))) <= 1e-9
    assert out.history[-1] == out.inner_residual


def test_warm_start_is_stable(reduction: SaddleReduction, reference_basis: Basis) -> None:
    u = _e2_field(reference_basis, 4.0, 1.0)
    first = reduction.solve(u)
    again = reduction.solve(u, h0=first.h)
    assert again.iterations <= 1
    np.testing.assert_allclose(again.h.coeffs, first.h.coeffs, atol=1e-8)


def test_solution_does_not_depend_on_the_start(reduction: SaddleReduction, reference_basis: Basis, rng: np.random.Generator) -> None:
    u = _e2_field(reference_basis, -3.0, 2.0)
    cold = reduction.solve(u)
    noise = 0.1 * rng.standard_normal(reference_basis.size) / np.sqrt(1.0 + reference_basis.e_weights)
    warm = reduction.solve(u, h0=CoefficientField(reference_basis, noise))
    np.testing.assert_allclose(warm.h.coeffs, cold.h.coeffs, atol=1e-7)
    assert warm.phi_hat == pytest.approx(cold.phi_hat, rel=1e-10)


def test_reduction_rejects_inputs_outside_e2(reduction: SaddleReduction, reference_basis: Basis) -> None:
    with pytest.raises(DomainError):
        reduction.solve(reference_basis.unit(Mode(1, 0)))


def test_phi_hat_and_grad_projects_first(reference_basis: Basis, arctan: ArctanNonlinearity) -> None:
    u = _e2_field(reference_basis, 2.0, 0.0)
    noisy = u + reference_basis.unit(Mode(1, 0), 5.0)
    a = phi_hat_and_grad(noisy, arctan, reference_basis.grid)
    b = phi_hat_and_grad(u, arctan, reference_basis.grid)
    assert a.phi_hat == pytest.approx(b.phi_hat, rel=1e-12)


def test_budget_exhaustion(reference_functional: EnergyFunctional, reference_basis: Basis) -> None:
    tight = SaddleReduction(reference_functional, tol_inner=1e-14, budget=3)
    with pytest.raises(ConvergenceError) as info:
        tight.solve(_e2_field(reference_basis, 6.0, 0.0))
    assert info.value.iterations == 3


def test_reduced_coordinates(reduced_problem: ReducedProblem) -> None:
    assert reduced_problem.dim == 2
    x = np.array([3.0, -4.0])
    assert reduced_problem.field(x).e_norm == pytest.approx(5.0)
    np.testing.assert_allclose(reduced_problem.coordinates(reduced_problem.coeffs(x))[0], x)
    assert reduced_problem.field(x).support(Subspace.E2)


def test_reduced_gradient_matches_finite_differences(reduced_problem: ReducedProblem) -> None:
    x = np.array([2.0, -1.0])
    v = np.array([0.6, 0.8])
    eps = 1e-5
    values, grads, _ = reduced_problem.evaluate(np.vstack([x, x + eps * v, x - eps * v]))
    fd = (values[1] - values[2]) / (2 * eps)
    assert fd == pytest.approx(float(grads[0] @ v), rel=1e-6, abs=1e-8)


def test_reduced_functional_is_invariant_under_grid_time_shifts(reduced_problem: ReducedProblem) -> None:
    # A shift by T / nt rotates the k = 2 pair by 2 * 2 pi / nt.
    angles = np.arange(0, 36, 4) * math.pi / 9
    xs = 7.0 * np.column_stack([np.cos(angles), np.sin(angles)])
    values, _, _ = reduced_problem.evaluate(xs)
    np.testing.assert_allclose(values, values[0], rtol=1e-9)


def test_reduced_functional_is_positive_near_zero(reduced_problem: ReducedProblem) -> None:
    values, _, _ = reduced_problem.evaluate(np.array([[0.5, 0.0], [0.0, 1.0]]))
    assert np.all(values > 0)
    assert reduced_problem.full_gradient_norm(np.zeros(2), np.zeros(297)) == 0.0


@pytest.mark.parametrize("scale", [1e-3, 0.1, 1.0])
def test_reduced_point_is_a_saddle(reduction: SaddleReduction, reference_basis: Basis, rng: np.random.Generator, scale: float) -> None:
    functional = reduction.functional
    point = reduction.solve(_e2_field(reference_basis, 4.0, 1.0)).point.coeffs
    center = float(functional.energy(point))
    noise = scale * rng.standard_normal((8, reference_basis.size)) / np.sqrt(reference_basis.e_weights)
    v = np.where(reference_basis.mask(Subspace.E1), noise, 0.0)
    w = np.where(reference_basis.mask(Subspace.E3), noise, 0.0)
    # Phi(u + v + h(u)) <= Phi(u + h(u)) <= Phi(u + h(u) + w) for v in E1, w in E3.
    assert np.all(functional.energy(point + v) <= center + 1e-10)
    assert np.all(functional.energy(point + w) >= center - 1e-10)


def test_linear_sweeps_never_raise_the_residual(reference_basis: Basis, rng: np.random.Generator) -> None:
    linear = SaddleReduction(EnergyFunctional(reference_basis, LinearNonlinearity(c=2.0)), tol_inner=1e-9)
    e13 = reference_basis.mask("E1+E3")
    h0 = np.where(e13, 0.1 * rng.standard_normal(reference_basis.size) / np.sqrt(1.0 + reference_basis.e_weights), 0.0)
    out = linear.solve(_e2_field(reference_basis, 1.5, -0.5), CoefficientField(reference_basis, h0))
    assert len(out.history) > 2
    assert np.all(np.diff(out.history) <= 0)
    assert out.nonmonotone == 0


def test_growth_counter_matches_the_history(reduction: SaddleReduction, reference_basis: Basis) -> None:
    out = reduction.solve(_e2_field(reference_basis, 4.0, 1.0))
    history = np.asarray(out.history)
    grew = history[1:] > history[:-1] * (1.0 + 1e-12) + 1e-15
    assert out.nonmonotone == int(grew.sum())


def test_diverging_sweeps_raise(reference_basis: Basis, rng: np.random.Generator) -> None:
    # With f_u = 20 > mu0 - eta the sweep amplifies the E3 modes with lambda - mu below 2 s = 20.
    steep = SaddleReduction(EnergyFunctional(reference_basis, LinearNonlinearity(c=20.0)), tol_inner=1e-9)
    e13 = reference_basis.mask("E1+E3")
    h0 = CoefficientField(reference_basis, np.where(e13, 0.1 * rng.standard_normal(reference_basis.size), 0.0))
    with pytest.raises(MonotonicityError, match="diverging") as info:
        steep.solve(_e2_field(reference_basis, 1.0, 0.0), h0)
    assert info.value.iterations > 0
