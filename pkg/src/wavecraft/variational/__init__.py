# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Energy functional, saddle-point reduction and critical point searches."""

from .critsearch import (
    CriticalKind,
    CriticalPointReport,
    GeometryEstimate,
    certify,
    count_distinct,
    estimate_geometry,
    find_global_max,
    find_min_in_ball,
    mountain_pass,
    symmetry_orbit,
)
from .functional import EnergyFunctional, Nonlinearity, build_nonlinearity, hessian_form, phi, phi_grad
from .reduction import ReducedEval, ReducedProblem, SaddleReduction, phi_hat_and_grad, solve_h

__all__ = [
    "CriticalKind",
    "CriticalPointReport",
    "EnergyFunctional",
    "GeometryEstimate",
    "Nonlinearity",
    "ReducedEval",
    "ReducedProblem",
    "SaddleReduction",
    "build_nonlinearity",
    "certify",
    "count_distinct",
    "estimate_geometry",
    "find_global_max",
    "find_min_in_ball",
    "hessian_form",
    "mountain_pass",
    "phi",
    "phi_grad",
    "phi_hat_and_grad",
    "solve_h",
    "symmetry_orbit",
]
