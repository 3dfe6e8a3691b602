import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from nlsbif.discretization.grid import Grid, GridFunction, l2_norm, quadrature, second_derivative_matrix
from nlsbif.operators.banded import Parity, ParityBasis
from nlsbif.operators.schrodinger import assemble_Lplus, linear_operator, ProblemParams, residual
from nlsbif.potentials.linear_modes import LinearModes
from nlsbif.potentials.potentials import Potential
from nlsbif.utilities.exceptions import (
    DivergedToZero,
    InvalidParameters,
    MaxIterExceeded,
    NonFiniteInput,
    NonpositiveShiftedE,
    SingularJacobian,
    WrongSideOfE0,
)

_logger = logging.getLogger(__name__)


class Symmetry(Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-10
    max_iter: int = 50
    damping: bool = True
    max_halvings: int = 20
    jacobian_guard: float = 1e-8
    zero_threshold: float = 1e-12
    symmetric_constraint: bool = False
    parity: Parity = Parity.ANY

    @property
    def effective_parity(self) -> Parity:
        return Parity.EVEN if self.symmetric_constraint else Parity(self.parity)

    def with_parity(self, parity: Parity) -> "NewtonOptions":
        return replace(self, parity=parity, symmetric_constraint=parity == Parity.EVEN)


@dataclass(frozen=True)
class StationaryState:
    E: float
    phi: GridFunction
    residual_norm: float = 0.0
    N: float = 0.0
    norm_2p2: float = 0.0
    grad_norm2: float = 0.0
    energy: float = 0.0
    pohozaev_residual: float = 0.0
    stationarity_residual: float = 0.0
    x_cm: float = 0.0
    symmetry: Symmetry = Symmetry.NONE
    iterations: int = 0
    residual_history: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    @property
    def relative_stationarity(self) -> float:
        return self.stationarity_residual / max(abs(self.E) * self.N, np.finfo(float).tiny)

    @property
    def relative_pohozaev(self) -> float:
        return self.pohozaev_residual / max(abs(self.E) * self.N, np.finfo(float).tiny)


def classify_symmetry(phi: GridFunction, rtol: float = 1e-10) -> Symmetry:
    scale = phi.norm()
    if scale == 0:
        return Symmetry.EVEN
    if phi.antisymmetric_part().norm() <= rtol * scale:
        return Symmetry.EVEN
    if phi.symmetrize().norm() <= rtol * scale:
        return Symmetry.ODD
    return Symmetry.NONE


def diagnostics(state: StationaryState, potential: Potential, params: ProblemParams) -> StationaryState:
    """Norms, energy, the stationarity and Pohozaev identities and the centre of mass."""
    grid = state.grid
    phi = state.phi.values
    x = grid.nodes
    c, sigma, p = params.kinetic_factor, params.sigma, params.p
    density = phi**2
    N = quadrature(grid, density)
    norm_2p2 = quadrature(grid, np.abs(phi) ** (2 * p + 2))
    grad_norm2 = quadrature(grid, phi * second_derivative_matrix(grid, params.stencil_order).dot(phi))
    potential_term = quadrature(grid, potential.on_grid(grid) * density)
    virial_term = quadrature(grid, (potential.on_grid(grid) + x * potential.first_derivative(x)) * density)
    energy = c * (grad_norm2 + potential_term) + sigma / (p + 1) * norm_2p2
    stationarity = c * (grad_norm2 + potential_term) + sigma * norm_2p2 + state.E * N
    pohozaev = c * (virial_term - grad_norm2) + sigma / (p + 1) * norm_2p2 + state.E * N
    return replace(
        state,
        N=N,
        norm_2p2=norm_2p2,
        grad_norm2=grad_norm2,
        energy=energy,
        stationarity_residual=abs(stationarity),
        pohozaev_residual=abs(pohozaev),
        x_cm=quadrature(grid, x * density) / N if N > 0 else 0.0,
        symmetry=classify_symmetry(state.phi),
    )


def _tolerance(options: NewtonOptions, phi_norm: float, E: float) -> float:
    return options.tol * max(1.0, phi_norm * (1.0 + abs(E)))


def newton_solve(
    seed: GridFunction,
    E: float,
    potential: Potential,
    params: ProblemParams,
    options: Optional[NewtonOptions] = None,
) -> StationaryState:
    """Damped Newton iteration for F(phi, E) = 0 at fixed E with Jacobian L+.

    With a parity constraint the unknowns are the coordinates in the even or odd half-grid basis, so the
    iterates keep the parity exactly.
    """
    options = options or NewtonOptions()
    grid = seed.grid
    if not np.all(np.isfinite(seed.values)):
        raise NonFiniteInput("The Newton seed contains NaN or Inf values.")
    basis = ParityBasis(grid.n, options.effective_parity)
    coords = basis.restrict(seed.values)
    phi = basis.extend(coords)
    operator = linear_operator(potential, grid, params)

    def _residual(values: np.ndarray) -> np.ndarray:
        return residual(values, E, potential, params, grid=grid, operator=operator).values

    F = _residual(phi)
    history = []
    for iteration in range(options.max_iter + 1):
        phi_norm = l2_norm(grid, phi)
        if phi_norm < options.zero_threshold:
            zero = StationaryState(E=E, phi=GridFunction(grid, np.zeros(grid.n)), symmetry=Symmetry.EVEN)
            raise DivergedToZero(f"Newton iterates collapsed to the zero solution at E={E:.6g}.", state=zero)
        residual_norm = l2_norm(grid, F)
        history.append(residual_norm)
        _logger.debug(f"Newton E={E:.8g} iteration {iteration}: |F|={residual_norm:.3e}")
        if residual_norm <= _tolerance(options, phi_norm, E):
            break
        if iteration == options.max_iter:
            raise MaxIterExceeded(
                f"Newton did not converge at E={E:.8g} in {options.max_iter} iterations (|F|={residual_norm:.3e})."
            )
        jacobian, _ = assemble_Lplus(phi, E, potential, params, grid=grid, operator=operator).restrict(basis.parity)
        guard = options.jacobian_guard
        if guard > 0 and jacobian.count_eigenvalues(-guard, guard) > 0:
            raise SingularJacobian(f"L+ has an eigenvalue within {guard:.0e} of zero at E={E:.8g}.")
        step = -jacobian.solve(basis.restrict(F))
        merit = residual_norm**2
        t = 1.0
        for _ in range(options.max_halvings + 1):
            trial_coords = coords + t * step
            trial_phi = basis.extend(trial_coords)
            trial_F = _residual(trial_phi)
            if not options.damping or l2_norm(grid, trial_F) ** 2 <= (1.0 - 1e-4 * t) * merit:
                break
            t *= 0.5
        else:
            raise MaxIterExceeded(f"Line search failed to reduce the residual at E={E:.8g}.")
        coords, phi, F = trial_coords, trial_phi, trial_F
    state = StationaryState(
        E=E,
        phi=GridFunction(grid, phi),
        residual_norm=history[-1],
        iterations=len(history) - 1,
        residual_history=tuple(history),
    )
    return diagnostics(state, potential, params)


def seed_from_linear(modes: LinearModes, E: float, params: ProblemParams, mode: int = 0) -> GridFunction:
    """Leading-order small-amplitude state a psi_k with E - E_k = -sigma |psi_k|_{2p+2}^{2p+2} a^{2p}."""
    if mode == 0:
        E_k, psi = modes.E0, modes.psi0
    else:
        if modes.psi1 is None:
            raise InvalidParameters("The potential has no second bound state to seed from.")
        E_k, psi = modes.E1, modes.psi1
    shift = E - E_k
    if shift * params.sigma > 0:
        side = "above" if params.sigma < 0 else "below"
        raise WrongSideOfE0(f"For sigma={params.sigma} small states exist {side} E_{mode}={E_k:.8g}, got E={E:.8g}.")
    amplitude = (abs(shift) / (abs(params.sigma) * modes.norm_2p2(params.p, mode))) ** (1.0 / (2 * params.p))
    return amplitude * psi


def soliton(y: np.ndarray, p: float, sigma: float) -> np.ndarray:
    """Explicit solution of -u'' + u + sigma |u|^{2p} u = 0, ((1+p)/(-sigma))^{1/2p} sech^{1/p}(p y)."""
    if sigma >= 0:
        raise InvalidParameters(f"The explicit soliton needs sigma < 0, got {sigma}.")
    t = np.exp(-p * np.abs(np.asarray(y, dtype=float)))
    sech = 2.0 * t / (1.0 + t * t)
    return ((1.0 + p) / (-sigma)) ** (1.0 / (2 * p)) * sech ** (1.0 / p)


def soliton_width(x0: float, E: float, potential: Potential, params: ProblemParams) -> float:
    """R = (E + V(x0))^{-1/2} in section1 units."""
    shifted = params.to_section1_E(E) + float(potential.value(np.array([x0]))[0])
    if shifted <= 0:
        raise NonpositiveShiftedE(f"E + V(x0) must be positive, got {shifted:.6g} at x0={x0}.")
    return shifted**-0.5


def seed_soliton_at(x0: float, E: float, potential: Potential, params: ProblemParams, grid: Grid) -> GridFunction:
    """R^{-1/p} u_inf((x - x0) / R), concentrated at x0."""
    R = soliton_width(x0, E, potential, params)
    profile = soliton((grid.nodes - x0) / R, params.p, params.section1_sigma)
    return GridFunction(grid, R ** (-1.0 / params.p) * profile)
