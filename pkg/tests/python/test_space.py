import math

import numpy as np
import pytest

from wavecraft.errors import DomainError, ResolutionError
from wavecraft.spectral.space import (
    Basis,
    CoefficientField,
    GridSampling,
    Mode,
    Parity,
    analyze,
    eigenfunction_value,
    embed,
    gram_audit,
    min_radial_nodes,
    norms,
    project,
    sample_values,
    synthesize,
)
from wavecraft.spectral.spectrum import ProblemConfig, SpectrumTable, Subspace, enumerate_spectrum


def test_mode_slots() -> None:
    assert Mode(1, 0).slot == 0
    assert Mode(1, 3, Parity.COS).slot == 5
    assert Mode(1, 3, Parity.SIN).slot == 6


def test_no_sin_mode_at_k_zero() -> None:
    with pytest.raises(DomainError):
        Mode(1, 0, Parity.SIN)
    with pytest.raises(DomainError):
        Mode(0, 1)


def test_index_and_mode_are_inverse(reference_basis: Basis) -> None:
    for mode in [Mode(1, 0), Mode(2, 2, Parity.SIN), Mode(9, 16, Parity.COS)]:
        assert reference_basis.mode(reference_basis.index(mode)) == mode
    with pytest.raises(DomainError):
        reference_basis.index(Mode(10, 0))


def test_gram_matrix_is_identity(reference_basis: Basis) -> None:
    assert gram_audit(reference_basis) <= 1e-8


def test_gram_matrix_at_default_truncation(reference_config: ProblemConfig) -> None:
    config = reference_config.with_box(12, 24)
    table = enumerate_spectrum(config)
    grid = GridSampling.quadrature(config, nt=128, nr=96)
    assert gram_audit(Basis(table, grid)) <= 1e-8


def test_min_radial_nodes(reference_table: SpectrumTable) -> None:
    # gamma_9 = 17 pi / 2 for n = 1
    assert min_radial_nodes(reference_table) == 19


def test_under_resolved_grids_are_rejected(reference_config: ProblemConfig, reference_table: SpectrumTable) -> None:
    with pytest.raises(ResolutionError, match="2 \\* k_max"):
        Basis(reference_table, GridSampling.quadrature(reference_config, nt=32, nr=40))
    with pytest.raises(ResolutionError, match="gamma_jmax"):
        Basis(reference_table, GridSampling.quadrature(reference_config, nt=36, nr=10))
    with pytest.raises(ResolutionError):
        GridSampling.quadrature(reference_config, nt=1, nr=40)


def test_synthesized_mode_matches_eigenfunction(reference_basis: Basis, reference_table: SpectrumTable) -> None:
    grid = reference_basis.grid
    tt, rr = np.meshgrid(grid.t, grid.r, indexing="ij")
    for mode in [Mode(1, 0), Mode(2, 2, Parity.COS), Mode(3, 5, Parity.SIN)]:
        values = synthesize(reference_basis.unit(mode), grid)
        np.testing.assert_allclose(values, eigenfunction_value(reference_table, mode, tt, rr), atol=1e-12)


def test_analyze_recovers_coefficients(reference_basis: Basis, reference_table: SpectrumTable, rng: np.random.Generator) -> None:
    u = CoefficientField(reference_basis, rng.standard_normal(reference_basis.size))
    back = analyze(synthesize(u, reference_basis.grid), reference_basis.grid, reference_table)
    np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-10)


def test_analyze_checks_shape(reference_basis: Basis, reference_table: SpectrumTable) -> None:
    with pytest.raises(ResolutionError):
        analyze(np.zeros((3, 3)), reference_basis.grid, reference_table)


def test_batched_synthesis(reference_basis: Basis, rng: np.random.Generator) -> None:
    c = rng.standard_normal((2, 3, reference_basis.size))
    values = reference_basis.synthesize(c)
    assert values.shape == (2, 3, reference_basis.grid.nt, reference_basis.grid.nr)
    np.testing.assert_allclose(values[1, 2], reference_basis.synthesize(c[1, 2]), atol=1e-12)


def test_eigenfunction_domain(reference_table: SpectrumTable) -> None:
    with pytest.raises(DomainError):
        eigenfunction_value(reference_table, Mode(1, 0), -0.1, 0.5)
    with pytest.raises(DomainError):
        eigenfunction_value(reference_table, Mode(1, 0), 0.0, 2.0)
    with pytest.raises(DomainError):
        eigenfunction_value(reference_table, Mode(10, 0), 0.0, 0.0)


def test_subspace_masks_partition(reference_basis: Basis) -> None:
    e1, e2, e3 = (reference_basis.mask(s) for s in (Subspace.E1, Subspace.E2, Subspace.E3))
    assert np.all(e1 ^ e2 ^ e3)
    assert not np.any(e1 & e2) and not np.any(e2 & e3)
    np.testing.assert_array_equal(reference_basis.mask("E1+E3"), e1 | e3)
    assert e2.sum() == 2
    with pytest.raises(DomainError):
        reference_basis.mask("E4")


def test_project_onto_e2(reference_basis: Basis, rng: np.random.Generator) -> None:
    u = CoefficientField(reference_basis, rng.standard_normal(reference_basis.size))
    p = project(u, "E2")
    assert p.support("E2")
    assert not u.support("E2")
    np.testing.assert_array_equal(project(p, "E2").coeffs, p.coeffs)


def test_field_norms(reference_basis: Basis) -> None:
    u = reference_basis.unit(Mode(2, 2, Parity.SIN), amplitude=2.0)
    assert u.e_norm == pytest.approx(2.0 * math.sqrt(3.5))
    assert u.quadratic() == pytest.approx(14.0)
    assert u.l2_norm == 2.0
    n = norms(u)
    grid = reference_basis.grid
    assert 0 < n.l1_norm <= math.sqrt(grid.T * grid.R) * n.l2_norm


def test_quadratic_form_signs(reference_basis: Basis) -> None:
    assert reference_basis.unit(Mode(1, 0)).quadratic() == pytest.approx(-0.5)
    assert reference_basis.unit(Mode(2, 0)).quadratic() > 0
    assert reference_basis.unit(Mode(1, 1)).quadratic() == pytest.approx(-1.5)


def test_coefficient_length_is_checked(reference_basis: Basis) -> None:
    with pytest.raises(DomainError):
        CoefficientField(reference_basis, np.zeros(reference_basis.size + 1))


def test_embed_into_larger_truncation(reference_basis: Basis, reference_config: ProblemConfig, rng: np.random.Generator) -> None:
    config = reference_config.with_box(10, 18)
    table = enumerate_spectrum(config)
    grid = GridSampling.quadrature(config, nt=40, nr=40)
    target = Basis(table, grid)
    u = CoefficientField(reference_basis, rng.standard_normal(reference_basis.size))
    lifted = embed(u, target)
    assert lifted.l2_norm == pytest.approx(u.l2_norm)
    np.testing.assert_allclose(target.synthesize(lifted.coeffs), synthesize(u, grid), atol=1e-10)
    with pytest.raises(DomainError):
        embed(lifted, reference_basis)


def test_sample_values_are_periodic_and_vanish_at_the_wall(reference_basis: Basis, rng: np.random.Generator) -> None:
    u = CoefficientField(reference_basis, rng.standard_normal(reference_basis.size))
    t, r, values = sample_values(u, 9, 7)
    grid = reference_basis.grid
    assert values.shape == (9, 7)
    assert t[0] == 0.0 and t[-1] == grid.T
    assert r[0] == 0.0 and r[-1] == grid.R
    np.testing.assert_allclose(values[:, -1], 0.0, atol=1e-10)
    np.testing.assert_allclose(values[0], values[-1], atol=1e-10)


@pytest.mark.parametrize("m", [1, 5, 35])
def test_time_shift_by_grid_steps_rolls_the_samples(reference_basis: Basis, rng: np.random.Generator, m: int) -> None:
    grid = reference_basis.grid
    c = rng.standard_normal(reference_basis.size)
    shifted = reference_basis.time_shift(c, m * grid.T / grid.nt)
    np.testing.assert_allclose(reference_basis.synthesize(shifted), np.roll(reference_basis.synthesize(c), -m, axis=0), atol=1e-10)
    # Shifts are rotations of each (cos, sin) pair.
    assert np.linalg.norm(shifted) == pytest.approx(np.linalg.norm(c))
    np.testing.assert_allclose(shifted[reference_basis.mode_k == 0], c[reference_basis.mode_k == 0])


def test_time_reversal_flips_the_time_axis(reference_basis: Basis, rng: np.random.Generator) -> None:
    c = rng.standard_normal((2, reference_basis.size))
    values = reference_basis.synthesize(c)
    reversed_values = reference_basis.synthesize(reference_basis.time_reversal(c))
    np.testing.assert_allclose(reversed_values, np.roll(values[:, ::-1], 1, axis=1), atol=1e-10)
    np.testing.assert_allclose(reference_basis.time_reversal(reference_basis.time_reversal(c)), c)
