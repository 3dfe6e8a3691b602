import logging
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from nlsbif.discretization.grid import Grid, GridFunction, quadrature
from nlsbif.operators.banded import Parity
from nlsbif.operators.schrodinger import linear_operator, ProblemParams
from nlsbif.potentials.potentials import DoubleWellSech2, Potential, sech
from nlsbif.utilities.exceptions import InvalidParameters, NoBoundState

_logger = logging.getLogger(__name__)

# ground state of -d^2/dx^2 - sech^2(x) is sech^alpha(x) with alpha (alpha + 1) = 1
_SECH2_ALPHA = 0.5 * (np.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class LinearModes:
    """Bound states of c (-d^2/dx^2 + V): eigenvalues -E0 < -E1 < 0 with even psi0 and odd psi1."""

    E0: float
    psi0: GridFunction
    E1: Optional[float] = None
    psi1: Optional[GridFunction] = None

    @property
    def grid(self) -> Grid:
        return self.psi0.grid

    @property
    def splitting(self) -> Optional[float]:
        return None if self.E1 is None else self.E0 - self.E1

    def norm_2p2(self, p: float, mode: int = 0) -> float:
        psi = self.psi0 if mode == 0 else self.psi1
        return quadrature(self.grid, np.abs(psi.values) ** (2 * p + 2))


class SplittingRow(NamedTuple):
    s: float
    E0: float
    E1: Optional[float]
    splitting: float
    distance0: float
    distance1: float


def _lowest(potential: Potential, grid: Grid, params: ProblemParams, parity: Parity):
    reduced, basis = linear_operator(potential, grid, params).restrict(parity)
    w, v = reduced.eigh(1)
    values = basis.extend(v[:, 0])
    return float(w[0]), values / np.sqrt(quadrature(grid, values**2))


def solve_linear_modes(
    potential: Potential,
    grid: Grid,
    k: int = 2,
    params: Optional[ProblemParams] = None,
    stencil_order: Optional[int] = None,
) -> LinearModes:
    """Lowest bound states, solved separately on the even and odd half grids.

    Eigenvalues are reported in the units of ``params.normalization``. The stencil defaults to the Newton stencil of
    ``params`` so that a branch starts from the level of its own discretization; ``stencil_order=2`` gives the
    tridiagonal problem.
    """
    if k not in (1, 2):
        raise InvalidParameters(f"Only the two lowest linear modes are supported, got k={k}.")
    params = params or ProblemParams()
    if stencil_order is not None:
        params = replace(params, stencil_order=stencil_order)
    mu0, psi0 = _lowest(potential, grid, params, Parity.EVEN)
    if mu0 >= 0:
        raise NoBoundState(f"The linear operator has no eigenvalue below the continuum edge 0 (lowest {mu0:.3e}).")
    m = grid.center
    if psi0[m] < 0:
        psi0 = -psi0
    E1, psi1 = None, None
    if k == 2:
        mu1, odd = _lowest(potential, grid, params, Parity.ODD)
        if mu1 < 0:
            E1, psi1 = -mu1, GridFunction(grid, odd if odd[m + 1] > 0 else -odd)
    modes = LinearModes(E0=-mu0, psi0=GridFunction(grid, psi0), E1=E1, psi1=psi1)
    _logger.info(f"Linear modes on n={grid.n}, dx={grid.dx:.4g}: E0={modes.E0:.9f}, E1={modes.E1}")
    return modes


def linear_lambda_prime(modes: LinearModes, p: float) -> float:
    """E-derivative of the second L+ eigenvalue at zero amplitude on the branch bifurcating from E0."""
    if modes.psi1 is None:
        raise NoBoundState("The second linear mode is needed for the zero-amplitude eigenvalue slope.")
    overlap = quadrature(modes.grid, modes.psi1.values**2 * np.abs(modes.psi0.values) ** (2 * p))
    return 1.0 - (2 * p + 1) * overlap / modes.norm_2p2(p)


def single_well_ground_state(grid: Grid, shift: float = 0.0) -> np.ndarray:
    """L2-normalized ground state of the sech^2 well centred at ``shift``."""
    values = sech(grid.nodes - shift) ** _SECH2_ALPHA
    return values / np.sqrt(quadrature(grid, values**2))


def _distance(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    g = g / np.sqrt(quadrature(grid, g**2))
    return float(np.sqrt(quadrature(grid, (f - g) ** 2)))


def double_well_splitting(
    s_list: Sequence[float], grid: Grid, params: Optional[ProblemParams] = None, stencil_order: int = 2
) -> List[SplittingRow]:
    """Tunnelling splitting of the two lowest double-well levels and the distance of the modes to the
    (anti)symmetrized single-well ground states."""
    rows = []
    for s in s_list:
        modes = solve_linear_modes(DoubleWellSech2(s), grid, k=2, params=params, stencil_order=stencil_order)
        left, right = single_well_ground_state(grid, -s), single_well_ground_state(grid, s)
        distance0 = _distance(grid, modes.psi0.values, left + right)
        distance1 = np.nan if modes.psi1 is None else _distance(grid, modes.psi1.values, right - left)
        splitting = np.nan if modes.E1 is None else modes.E0 - modes.E1
        rows.append(SplittingRow(float(s), modes.E0, modes.E1, splitting, distance0, distance1))
    return rows
