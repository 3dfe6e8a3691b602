"""Residual and linearizations of c (-phi'' + V phi) + sigma |phi|^{2p} phi + E phi = 0.

The kinetic factor c is 1 in the ``section1`` normalization and 1/2 in ``section5``; the latter is the former with
sigma and E divided by c, so eigenvalues of L+ and L- scale by c between the two.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from nlsbif.discretization.grid import Grid, GridFunction, inner, l2_norm, quadrature, quadrature_weights
from nlsbif.discretization.grid import second_derivative_matrix
from nlsbif.operators.banded import bordered_solve, Parity, SymmetricBandedOperator
from nlsbif.utilities.exceptions import EigenFailure, InvalidParameters, NonFiniteInput, RhsNotOrthogonal

_logger = logging.getLogger(__name__)


class Normalization(Enum):
    SECTION1 = "section1"
    SECTION5 = "section5"


class OperatorTag(Enum):
    LPLUS = "Lplus"
    LMINUS = "Lminus"
    L0 = "L0"


@dataclass(frozen=True)
class ProblemParams:
    sigma: float = -1.0
    p: float = 1.0
    normalization: Normalization = Normalization.SECTION1
    stencil_order: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if self.sigma == 0:
            raise InvalidParameters("sigma must be nonzero.", key="problem.sigma")
        if not self.p > 0:
            raise InvalidParameters(f"p must be positive, got {self.p}.", key="problem.p")
        if self.stencil_order not in (2, 4):
            raise InvalidParameters(f"Stencil order must be 2 or 4, got {self.stencil_order}.", key="grid.order")

    @property
    def kinetic_factor(self) -> float:
        return 1.0 if self.normalization == Normalization.SECTION1 else 0.5

    @property
    def focusing(self) -> bool:
        return self.sigma < 0

    @property
    def section1_sigma(self) -> float:
        return self.sigma / self.kinetic_factor

    def to_section1_E(self, E: float) -> float:
        return E / self.kinetic_factor

    def from_section1_E(self, E: float) -> float:
        return E * self.kinetic_factor

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sigma": self.sigma,
            "p": self.p,
            "normalization": self.normalization.value,
            "stencil_order": self.stencil_order,
        }


@dataclass(frozen=True)
class LinearizedSpectrum:
    operator_tag: OperatorTag
    eigenvalues: np.ndarray
    eigenfunctions: List[GridFunction]
    n_negative: int
    continuum_edge: Optional[float] = None
    discrete: List[bool] = field(default_factory=list)
    parity: Parity = Parity.ANY

    @property
    def lowest(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class LinearizationSpectrum:
    """Squared growth rates of the Hamiltonian linearization, i.e. minus the eigenvalues of L- L+ near zero."""

    squared_rates: np.ndarray
    n_unstable: int


def _values(phi: Union[GridFunction, np.ndarray]) -> np.ndarray:
    return phi.values if isinstance(phi, GridFunction) else np.asarray(phi, dtype=float)


def _grid_of(phi: Union[GridFunction, np.ndarray], grid: Optional[Grid]) -> Grid:
    if grid is not None:
        return grid
    if isinstance(phi, GridFunction):
        return phi.grid
    raise InvalidParameters("A grid is required when the state is passed as a bare array.")


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("The state contains NaN or Inf values.")


def linear_operator(potential, grid: Grid, params: ProblemParams) -> SymmetricBandedOperator:
    """c (-d^2/dx^2 + V)."""
    kinetic = second_derivative_matrix(grid, params.stencil_order).add_diagonal(potential.on_grid(grid))
    return kinetic.scaled(params.kinetic_factor)


def residual(
    phi: Union[GridFunction, np.ndarray],
    E: float,
    potential,
    params: ProblemParams,
    grid: Optional[Grid] = None,
    nonlinear_weight: float = 1.0,
    operator: Optional[SymmetricBandedOperator] = None,
) -> GridFunction:
    grid = _grid_of(phi, grid)
    values = _values(phi)
    _check_finite(values)
    if not np.isfinite(E):
        raise NonFiniteInput(f"E must be finite, got {E}.")
    operator = operator or linear_operator(potential, grid, params)
    nonlinear = nonlinear_weight * params.sigma * np.abs(values) ** (2 * params.p) * values
    return GridFunction(grid, operator.dot(values) + nonlinear + E * values)


def assemble_Lplus(
    phi: Union[GridFunction, np.ndarray],
    E: float,
    potential,
    params: ProblemParams,
    grid: Optional[Grid] = None,
    operator: Optional[SymmetricBandedOperator] = None,
) -> SymmetricBandedOperator:
    grid = _grid_of(phi, grid)
    values = _values(phi)
    operator = operator or linear_operator(potential, grid, params)
    return operator.add_diagonal(E + (2 * params.p + 1) * params.sigma * np.abs(values) ** (2 * params.p))


def assemble_Lminus(
    phi: Union[GridFunction, np.ndarray],
    E: float,
    potential,
    params: ProblemParams,
    grid: Optional[Grid] = None,
    operator: Optional[SymmetricBandedOperator] = None,
) -> SymmetricBandedOperator:
    grid = _grid_of(phi, grid)
    values = _values(phi)
    operator = operator or linear_operator(potential, grid, params)
    return operator.add_diagonal(E + params.sigma * np.abs(values) ** (2 * params.p))


def fix_sign(values: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Make the node of largest modulus positive; among near ties the rightmost node decides."""
    magnitude = np.abs(values)
    candidates = np.flatnonzero(magnitude >= magnitude.max() * (1.0 - rtol))
    return values if values[candidates[-1]] > 0 else -values


def lowest_eigenpairs(
    op: SymmetricBandedOperator,
    grid: Grid,
    k: int = 2,
    parity: Parity = Parity.ANY,
    operator_tag: OperatorTag = OperatorTag.LPLUS,
    continuum_edge: Optional[float] = None,
    negative_tol: float = 1e-8,
) -> LinearizedSpectrum:
    """The k algebraically smallest eigenpairs on the requested parity subspace, L2-normalized."""
    if k < 1:
        raise InvalidParameters(f"k must be at least 1, got {k}.")
    reduced, basis = op.restrict(parity)
    w, v = reduced.eigh(k)
    if len(w) < k:
        raise EigenFailure(f"Only {len(w)} of the {k} requested eigenvalues were found.")
    functions = []
    for j in range(len(w)):
        values = basis.extend(v[:, j])
        values = fix_sign(values / np.sqrt(quadrature(grid, values**2)))
        functions.append(GridFunction(grid, values))
    n_negative = reduced.count_below(-negative_tol)
    discrete = [True] * len(w) if continuum_edge is None else [bool(x < continuum_edge) for x in w]
    return LinearizedSpectrum(
        operator_tag=operator_tag,
        eigenvalues=np.asarray(w),
        eigenfunctions=functions,
        n_negative=n_negative,
        continuum_edge=continuum_edge,
        discrete=discrete,
        parity=parity,
    )


def solve_on_complement(
    op: SymmetricBandedOperator,
    rhs: GridFunction,
    kernel_vec: Optional[GridFunction] = None,
    orthogonality_tol: float = 1e-8,
    residual_tol: float = 1e-9,
) -> GridFunction:
    """Solve ``op w = rhs`` with ``<w, kernel_vec> = 0``; op is (nearly) singular along kernel_vec.

    Solved as the bordered system [[op, k], [k^T W, 0]] with W the quadrature weights.
    """
    grid = rhs.grid
    rhs_norm = rhs.norm()
    if kernel_vec is None or kernel_vec.norm() == 0.0:
        return GridFunction(grid, op.solve(rhs.values))
    kernel = kernel_vec.normalized()
    projection = inner(grid, rhs.values, kernel.values)
    if abs(projection) > orthogonality_tol * max(rhs_norm, np.finfo(float).tiny):
        raise RhsNotOrthogonal(f"Right-hand side has a component {projection:.3e} along the kernel vector.")
    w, _ = bordered_solve(op, kernel.values, quadrature_weights(grid) * kernel.values, rhs.values)
    relative = l2_norm(grid, op.dot(w) - rhs.values) / max(rhs_norm, np.finfo(float).tiny)
    if relative > residual_tol:
        _logger.warning(f"Complement solve relative residual {relative:.2e} exceeds {residual_tol:.0e}")
    return GridFunction(grid, w)


def linearization_spectrum(
    phi: GridFunction, E: float, potential, params: ProblemParams, k: int = 6, shift: float = 1e-4
) -> LinearizationSpectrum:
    """Eigenvalues of L- L+ nearest zero by shift-invert; a negative one is a real unstable pair."""
    grid = phi.grid
    operator = linear_operator(potential, grid, params)
    lplus = assemble_Lplus(phi, E, potential, params, operator=operator).tocsr()
    lminus = assemble_Lminus(phi, E, potential, params, operator=operator).tocsr()
    product = sparse.csc_matrix(lminus @ lplus)
    try:
        mu = eigs(product, k=min(k, grid.n - 2), sigma=-shift, which="LM", return_eigenvectors=False)
    except (ArpackError, ArpackNoConvergence, RuntimeError) as err:
        raise EigenFailure(f"Linearization eigen-solve failed: {err}") from err
    squared = np.sort(-mu.real)[::-1]
    scale = max(1.0, abs(E))
    n_unstable = int(np.sum((squared > 1e-8 * scale) & (np.abs(mu.imag) <= 1e-8 * scale)))
    return LinearizationSpectrum(squared_rates=squared, n_unstable=n_unstable)
