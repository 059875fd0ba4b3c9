from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from wavecraft.spectral.space import Basis, GridSampling, basis_for
from wavecraft.spectral.spectrum import ProblemConfig, SpectrumTable, enumerate_spectrum
from wavecraft.variational.functional import ArctanNonlinearity, EnergyFunctional
from wavecraft.variational.reduction import ReducedProblem, SaddleReduction

# Smallest box the truncation guard accepts for the reference problem.
SMALL_BOX = {"j_max": 9, "k_max": 16}
SMALL_GRID = {"nt": 36, "nr": 40}

REFERENCE_TOML = """\
[problem]
n = 1
R_coef = "1/2"
T_coef = "2"
mu = 1.5
beta = 6.0
eta = 0.5

[nonlinearity]
id = "{nl_id}"
params = {params}

[truncation]
j_max = 9
k_max = 16
nt = 36
nr = 40

[search]
seed = 7
starts = 3
ring_directions = 12
radius_samples = 24
scan_points = 41
path_nodes = 24
"""


def reference_toml(nl_id: str = "arctan", params: str = "{}") -> str:
    return REFERENCE_TOML.format(nl_id=nl_id, params=params)


@pytest.fixture
def write_config(tmp_path: Path):  # noqa: ANN201
    def write(text: str, name: str = "run.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture(scope="session")
def reference_config() -> ProblemConfig:
    return ProblemConfig(n=1, R_coef=Fraction(1, 2), T_coef=Fraction(2), mu=1.5, beta=6.0, eta=0.5, **SMALL_BOX)


@pytest.fixture(scope="session")
def reference_table(reference_config: ProblemConfig) -> SpectrumTable:
    return enumerate_spectrum(reference_config)


@pytest.fixture(scope="session")
def reference_grid(reference_config: ProblemConfig) -> GridSampling:
    return GridSampling.quadrature(reference_config, **SMALL_GRID)


@pytest.fixture(scope="session")
def reference_basis(reference_table: SpectrumTable, reference_grid: GridSampling) -> Basis:
    return basis_for(reference_table, reference_grid)


@pytest.fixture(scope="session")
def arctan() -> ArctanNonlinearity:
    return ArctanNonlinearity(beta=6.0, eta=0.5)


@pytest.fixture(scope="session")
def reference_functional(reference_basis: Basis, arctan: ArctanNonlinearity) -> EnergyFunctional:
    return EnergyFunctional(reference_basis, arctan)


@pytest.fixture(scope="session")
def reduction(reference_functional: EnergyFunctional) -> SaddleReduction:
    return SaddleReduction(reference_functional, tol_inner=1e-9)


@pytest.fixture(scope="session")
def reduced_problem(reduction: SaddleReduction) -> ReducedProblem:
    return ReducedProblem(reduction)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
