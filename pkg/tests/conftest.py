from typing import Sequence

import numpy as np
import pytest

from nlsbif.components.continuation import Branch, BranchPoint, BranchSymmetry, Provenance
from nlsbif.components.stationary import StationaryState
from nlsbif.discretization.grid import Grid, GridFunction
from nlsbif.operators.schrodinger import LinearizedSpectrum, OperatorTag, ProblemParams
from nlsbif.potentials.potentials import FreePotential, SingleWellSech2


@pytest.fixture
def coarse_grid() -> Grid:
    return Grid.from_spacing(15.0, 0.05)


@pytest.fixture
def params() -> ProblemParams:
    return ProblemParams(sigma=-1.0, p=1.0)


@pytest.fixture
def single_well() -> SingleWellSech2:
    return SingleWellSech2()


@pytest.fixture
def free() -> FreePotential:
    return FreePotential()


def synthetic_point(
    E: float, lambdas: Sequence[float], grid: Grid, N: float = 1.0, x_cm: float = 0.0, n_negative: int = 1
) -> BranchPoint:
    """Branch point with a Gaussian profile and prescribed L+ eigenvalues."""
    phi = GridFunction(grid, np.exp(-((grid.nodes - x_cm) ** 2)))
    state = StationaryState(E=E, phi=phi, N=N, x_cm=x_cm)
    spectrum = LinearizedSpectrum(
        operator_tag=OperatorTag.LPLUS,
        eigenvalues=np.asarray(lambdas, dtype=float),
        eigenfunctions=[phi for _ in lambdas],
        n_negative=n_negative,
    )
    return BranchPoint(state=state, lplus_spectrum=spectrum)


def synthetic_branch(E: Sequence[float], lambda1: Sequence[float], grid: Grid, label: str = "synthetic") -> Branch:
    points = [synthetic_point(e, (-1.0, lam), grid, N=e) for e, lam in zip(E, lambda1)]
    return Branch(
        label=label,
        symmetry=BranchSymmetry.EVEN,
        provenance=Provenance.FROM_LINEAR_MODE,
        points=points,
        potential=SingleWellSech2(),
    )
