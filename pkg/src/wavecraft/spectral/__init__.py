# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Bessel zeros, the wave-operator spectrum and the truncated eigenbasis."""

from .bessel import BesselOrder, BesselZeroTable, eval_J, eval_J_prime, scaled_radial, zeros
from .space import Basis, CoefficientField, GridSampling, Mode, Parity, analyze, basis_for, eigenfunction_value, embed, norms, project, synthesize
from .spectrum import ArithmeticProfile, ProblemConfig, SpectralConstants, SpectrumTable, Subspace, arithmetic_profile, enumerate_spectrum, gap_audit

__all__ = [
    "ArithmeticProfile",
    "Basis",
    "BesselOrder",
    "BesselZeroTable",
    "CoefficientField",
    "GridSampling",
    "Mode",
    "Parity",
    "ProblemConfig",
    "SpectralConstants",
    "SpectrumTable",
    "Subspace",
    "analyze",
    "arithmetic_profile",
    "basis_for",
    "eigenfunction_value",
    "embed",
    "enumerate_spectrum",
    "eval_J",
    "eval_J_prime",
    "gap_audit",
    "norms",
    "project",
    "scaled_radial",
    "synthesize",
    "zeros",
]
