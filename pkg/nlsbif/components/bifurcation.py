"""Symmetry-breaking pitchfork on an even branch.

The second L+ eigenvalue lambda(E) of an even state belongs to an odd eigenfunction. Where it crosses zero at E*,
two mirror-image asymmetric branches E(a) = E* + Q a^2 / 2 + o(a^2) bifurcate, and the slope of N along them
tends to R = 2 lambda'(E*) / Q + N'(E*).
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from nlsbif.components.continuation import (
    Branch,
    BranchSymmetry,
    ContinuationControls,
    continue_branch,
    Provenance,
)
from nlsbif.components.stationary import diagnostics, newton_solve, NewtonOptions, StationaryState
from nlsbif.discretization.grid import GridFunction, inner, l2_norm, quadrature_weights
from nlsbif.operators.banded import bordered_solve, Parity, parity_solve
from nlsbif.operators.schrodinger import (
    assemble_Lplus,
    linear_operator,
    lowest_eigenpairs,
    ProblemParams,
    residual,
    solve_on_complement,
)
from nlsbif.potentials.linear_modes import linear_lambda_prime, LinearModes, solve_linear_modes
from nlsbif.potentials.potentials import Potential
from nlsbif.utilities.exceptions import (
    BracketLost,
    DegenerateLambdaPrime,
    FellBackToSymmetric,
    InvalidParameters,
    MaxIterExceeded,
    NonFiniteInput,
    ZeroQ,
)

_logger = logging.getLogger(__name__)


class Classification(Enum):
    SUPERCRITICAL = "supercritical"
    SUBCRITICAL_R = "subcritical_R"
    SUBCRITICAL_Q = "subcritical_Q"
    DEGENERATE = "degenerate"


class NoCrossing(NamedTuple):
    lambda_min: float
    E_at_min: float
    monotone_decreasing: bool


class Bracket(NamedTuple):
    E_lo: float
    E_hi: float
    lambda_lo: float
    lambda_hi: float


@dataclass(frozen=True)
class BifurcationControls:
    crossing_tol: float = 1e-8
    nondegeneracy_tol: float = 1e-4
    xtol: float = 1e-10
    consistency_tol: float = 0.05
    a0_factor: float = 0.05
    a0_sweep: Tuple[float, ...] = (0.25, 0.5, 1.0)
    normal_form_tol: float = 0.1
    symmetric_tol: float = 1e-8
    retry_refined: bool = True


class LambdaPrime(NamedTuple):
    integral: float
    finite_difference: float
    discrepancy: float
    consistent: bool


class NPrime(NamedTuple):
    linear: float
    finite_difference: float


class QTerms(NamedTuple):
    Q: float
    quartic: float
    resolvent: float


class AStar(NamedTuple):
    overlap: float
    estimate: float
    odd_overlap: float


class NormalFormFit(NamedTuple):
    amplitudes: Tuple[float, ...]
    E_values: Tuple[float, ...]
    slope: float
    expected: float
    relative_error: float
    within_tolerance: bool


class LargeSeparationLimits(NamedTuple):
    lambda_prime: float
    Q: float
    R: float


@dataclass
class BifurcationReport:
    E_star: float
    psi_star: StationaryState
    phi_star: GridFunction
    lambda_prime: float
    Q: float
    R: float
    N_prime: float
    classification: Classification
    rationale: str
    params: ProblemParams = field(default_factory=ProblemParams)
    lambda_at_star: float = 0.0
    lambda_prime_estimates: Optional[LambdaPrime] = None
    N_prime_estimates: Optional[NPrime] = None
    Q_terms: Optional[QTerms] = None
    a_star: Optional[AStar] = None
    normal_form: Optional[NormalFormFit] = None
    refined_grid: bool = False

    @property
    def Q_section1(self) -> float:
        return self.Q / self.params.kinetic_factor

    @property
    def R_section1(self) -> float:
        return self.R * self.params.kinetic_factor

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "E_star": self.E_star,
            "lambda_at_star": self.lambda_at_star,
            "lambda_prime": self.lambda_prime,
            "Q": self.Q,
            "R": self.R,
            "N_prime": self.N_prime,
            "classification": self.classification.value,
            "rationale": self.rationale,
            "problem": self.params.to_dict(),
            "refined_grid": self.refined_grid,
            "grid": {"half_width": self.psi_star.grid.half_width, "n": self.psi_star.grid.n},
            "section1": {
                "Q": self.Q_section1,
                "R": self.R_section1,
                "Q_factor": 1.0 / self.params.kinetic_factor,
                "R_factor": self.params.kinetic_factor,
            },
        }
        for name, value in (
            ("lambda_prime_estimates", self.lambda_prime_estimates),
            ("N_prime_estimates", self.N_prime_estimates),
            ("Q_terms", self.Q_terms),
            ("a_star", self.a_star),
            ("normal_form", self.normal_form),
        ):
            record[name] = None if value is None else _plain(value._asdict())
        return record


def _plain(values: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in values.items():
        if isinstance(value, (tuple, list)):
            out[key] = [float(v) for v in value]
        elif isinstance(value, (bool, np.bool_)):
            out[key] = bool(value)
        else:
            out[key] = float(value)
    return out


def locate_crossing(branch: Branch) -> Union[Bracket, NoCrossing]:
    """First sign change of the second L+ eigenvalue from positive to negative along increasing E."""
    E, lam = branch.E, branch.lambda1
    if np.any(np.isnan(lam)):
        raise InvalidParameters(f"{branch.label}: the second L+ eigenvalue is not recorded at every point.")
    for i in range(len(E) - 1):
        if lam[i] > 0 and lam[i + 1] <= 0:
            _logger.info(f"{branch.label}: lambda crosses zero in [{E[i]:.8g}, {E[i + 1]:.8g}]")
            return Bracket(float(E[i]), float(E[i + 1]), float(lam[i]), float(lam[i + 1]))
    i = int(np.argmin(lam))
    monotone = bool(np.all(np.diff(lam) < 0))
    _logger.info(f"{branch.label}: no crossing up to E={E[-1]:.6g}; min lambda={lam[i]:.4e} at E={E[i]:.6g}")
    return NoCrossing(float(lam[i]), float(E[i]), monotone)


def _odd_lambda(state: StationaryState, potential: Potential, params: ProblemParams) -> Tuple[float, GridFunction]:
    lplus = assemble_Lplus(state.phi, state.E, potential, params)
    spectrum = lowest_eigenpairs(lplus, state.grid, k=1, parity=Parity.ODD)
    return spectrum.lowest, spectrum.eigenfunctions[0]


class _EvenSolver:
    """Even-constrained solves at nearby E, each seeded from the closest state solved so far."""

    def __init__(self, seeds: Sequence[StationaryState], potential, params, newton: NewtonOptions, resolve=False):
        self.potential = potential
        self.params = params
        self.newton = newton.with_parity(Parity.EVEN)
        self.states = {s.E: s for s in seeds}
        if resolve:
            self.states = {s.E: newton_solve(s.phi, s.E, potential, params, self.newton) for s in seeds}

    def solve(self, E: float) -> StationaryState:
        if E in self.states:
            return self.states[E]
        nearest = min(self.states, key=lambda e: abs(e - E))
        state = newton_solve(self.states[nearest].phi, E, self.potential, self.params, self.newton)
        self.states[E] = state
        return state

    def odd_lambda(self, E: float) -> float:
        return _odd_lambda(self.solve(E), self.potential, self.params)[0]


def refine_E_star(
    bracket: Bracket,
    branch: Branch,
    potential: Potential,
    params: ProblemParams,
    newton: Optional[NewtonOptions] = None,
    controls: Optional[BifurcationControls] = None,
) -> Tuple[float, StationaryState, GridFunction]:
    """Brent root of lambda(E) inside the bracket; returns E*, the even state and the odd kernel vector."""
    controls = controls or BifurcationControls()
    seeds = [branch.point_at(bracket.E_lo).state, branch.point_at(bracket.E_hi).state]
    if seeds[0].grid != seeds[1].grid:
        raise InvalidParameters("Bracket states live on different grids.")
    solver = _EvenSolver(seeds, potential, params, newton or NewtonOptions(), resolve=True)
    lam_lo, lam_hi = solver.odd_lambda(bracket.E_lo), solver.odd_lambda(bracket.E_hi)
    if lam_lo * lam_hi > 0:
        raise BracketLost(
            f"lambda has the same sign at both ends of [{bracket.E_lo:.8g}, {bracket.E_hi:.8g}] after re-solving "
            f"({lam_lo:.3e}, {lam_hi:.3e}); the crossing is likely a grid artifact, refine dx."
        )
    if lam_lo == 0.0 or lam_hi == 0.0:
        E_star = bracket.E_lo if lam_lo == 0.0 else bracket.E_hi
    else:
        E_star = brentq(solver.odd_lambda, bracket.E_lo, bracket.E_hi, xtol=controls.xtol)
    state = solver.solve(E_star)
    lam, phi_star = _odd_lambda(state, potential, params)
    if abs(lam) > controls.crossing_tol:
        _logger.warning(f"lambda(E*)={lam:.3e} exceeds the crossing tolerance {controls.crossing_tol:.0e}")
    _logger.info(f"Refined E*={E_star:.10g} with lambda={lam:.3e}")
    return float(E_star), state, phi_star


def _pow(values: np.ndarray, exponent: float) -> np.ndarray:
    """|values|^exponent with zero wherever values vanish."""
    magnitude = np.abs(values)
    out = np.zeros_like(magnitude)
    nonzero = magnitude > 0
    out[nonzero] = magnitude[nonzero] ** exponent
    return out


def _dpsi_dE(psi_star: StationaryState, potential: Potential, params: ProblemParams) -> np.ndarray:
    lplus = assemble_Lplus(psi_star.phi, psi_star.E, potential, params)
    return -parity_solve(lplus, psi_star.phi.values, Parity.EVEN)


def _step(E_star: float, E_floor: Optional[float]) -> float:
    h = 1e-4 * max(1.0, abs(E_star))
    if E_floor is not None and E_star > E_floor:
        h = min(h, 0.25 * (E_star - E_floor))
    return h


def compute_lambda_prime(
    psi_star: StationaryState,
    phi_star: GridFunction,
    potential: Potential,
    params: ProblemParams,
    newton: Optional[NewtonOptions] = None,
    E_floor: Optional[float] = None,
    controls: Optional[BifurcationControls] = None,
) -> LambdaPrime:
    """lambda'(E*) from the perturbation integral (primary) and a centred difference of fresh solves."""
    controls = controls or BifurcationControls()
    p, sigma = params.p, params.sigma
    grid = psi_star.grid
    psi = psi_star.phi.values
    phi = phi_star.normalized().values
    dpsi = _dpsi_dE(psi_star, potential, params)
    integral = 1.0 + (2 * p + 1) * 2 * p * sigma * inner(grid, np.sign(psi) * _pow(psi, 2 * p - 1) * phi**2, dpsi)
    h = _step(psi_star.E, E_floor)
    solver = _EvenSolver([psi_star], potential, params, newton or NewtonOptions())
    fd = (solver.odd_lambda(psi_star.E + h) - solver.odd_lambda(psi_star.E - h)) / (2.0 * h)
    discrepancy = abs(integral - fd) / max(abs(integral), np.finfo(float).tiny)
    consistent = discrepancy <= controls.consistency_tol
    if not consistent:
        _logger.warning(
            f"InconsistentEstimates: lambda'(E*) integral {integral:.6g} vs difference {fd:.6g} "
            f"({100 * discrepancy:.1f}% apart)"
        )
    return LambdaPrime(float(integral), float(fd), float(discrepancy), bool(consistent))


def compute_N_prime(
    psi_star: StationaryState,
    potential: Potential,
    params: ProblemParams,
    newton: Optional[NewtonOptions] = None,
    E_floor: Optional[float] = None,
) -> NPrime:
    """N'(E*) as -2 <psi, L+^{-1} psi> on the even subspace and by a centred difference."""
    grid = psi_star.grid
    linear = 2.0 * inner(grid, psi_star.phi.values, _dpsi_dE(psi_star, potential, params))
    h = _step(psi_star.E, E_floor)
    solver = _EvenSolver([psi_star], potential, params, newton or NewtonOptions())
    fd = (solver.solve(psi_star.E + h).N - solver.solve(psi_star.E - h).N) / (2.0 * h)
    return NPrime(float(linear), float(fd))


def compute_Q(
    psi_star: StationaryState,
    phi_star: GridFunction,
    lambda_prime: float,
    potential: Potential,
    params: ProblemParams,
    controls: Optional[BifurcationControls] = None,
) -> QTerms:
    """Curvature of the asymmetric branch, E(a) = E* + Q a^2 / 2 + o(a^2).

    Q = -(2p(2p+1) sigma^2 / lambda') [((2p-1)/(3 sigma)) <phi*^4, |psi|^{2p-2}> - 2p(2p+1) <g, L*^{-1} g>]
    with g = |psi|^{2p-2} psi phi*^2, the inverse taken on the complement of phi*.
    """
    controls = controls or BifurcationControls()
    if abs(lambda_prime) < controls.nondegeneracy_tol:
        raise DegenerateLambdaPrime(f"|lambda'(E*)| = {abs(lambda_prime):.3e} is below the nondegeneracy tolerance.")
    p, sigma = params.p, params.sigma
    grid = psi_star.grid
    psi = psi_star.phi.values
    phi = phi_star.normalized()
    g = GridFunction(grid, np.sign(psi) * _pow(psi, 2 * p - 1) * phi.values**2)
    lplus = assemble_Lplus(psi_star.phi, psi_star.E, potential, params)
    w = solve_on_complement(lplus, g, kernel_vec=phi)
    quartic = (2 * p - 1) / (3 * sigma) * inner(grid, phi.values**4, _pow(psi, 2 * p - 2))
    resolvent = 2 * p * (2 * p + 1) * g.inner(w)
    Q = -(2 * p * (2 * p + 1) * sigma**2 / lambda_prime) * (quartic - resolvent)
    return QTerms(float(Q), float(quartic), float(resolvent))


def compute_R(Q: float, lambda_prime: float, N_prime: float) -> float:
    if Q == 0.0 or not np.isfinite(Q):
        raise ZeroQ(f"R is undefined for Q={Q}.")
    return 2.0 * lambda_prime / Q + N_prime


def classify(Q: float, R: float, lambda_prime: float, nondegeneracy_tol: float = 1e-4) -> Tuple[Classification, str]:
    if abs(lambda_prime) < nondegeneracy_tol:
        return Classification.DEGENERATE, f"|lambda'(E*)|={abs(lambda_prime):.3e} < {nondegeneracy_tol:.0e}"
    if Q < 0:
        return Classification.SUBCRITICAL_Q, f"Q={Q:.6g} < 0: asymmetric branches exist below E* and are unstable"
    if R > 0:
        return Classification.SUPERCRITICAL, f"Q={Q:.6g} > 0 and R={R:.6g} > 0: asymmetric branches stable"
    return Classification.SUBCRITICAL_R, f"Q={Q:.6g} > 0 and R={R:.6g} < 0: asymmetric branches start unstable"


def solve_with_amplitude(
    psi_star: StationaryState,
    phi_star: GridFunction,
    a: float,
    potential: Potential,
    params: ProblemParams,
    E_guess: Optional[float] = None,
    newton: Optional[NewtonOptions] = None,
) -> StationaryState:
    """Solve F(phi, E) = 0 together with <phi - psi*, phi*> = a for (phi, E).

    Bordered Newton with Jacobian [[L+, phi], [W phi*, 0]], seeded from psi* + a phi*.
    """
    newton = newton or NewtonOptions()
    grid = psi_star.grid
    kernel = phi_star.normalized().values
    weighted = quadrature_weights(grid) * kernel
    psi = psi_star.phi.values
    operator = linear_operator(potential, grid, params)
    phi = psi + a * kernel
    E = psi_star.E if E_guess is None else E_guess

    def _residuals(values: np.ndarray, energy: float) -> Tuple[np.ndarray, float]:
        F = residual(values, energy, potential, params, grid=grid, operator=operator).values
        return F, float(weighted @ (values - psi)) - a

    F, c = _residuals(phi, E)
    for iteration in range(newton.max_iter + 1):
        merit = l2_norm(grid, F) ** 2 + c**2
        _logger.debug(f"Amplitude a={a:.4g} iteration {iteration}: |F|={np.sqrt(merit):.3e}, E={E:.10g}")
        if np.sqrt(merit) <= newton.tol * max(1.0, l2_norm(grid, phi) * (1.0 + abs(E))):
            break
        if iteration == newton.max_iter:
            raise MaxIterExceeded(f"Amplitude-constrained Newton did not converge for a={a:.4g}.")
        lplus = assemble_Lplus(phi, E, potential, params, grid=grid, operator=operator)
        d_phi, d_E = bordered_solve(lplus, phi, weighted, -F, -c)
        t = 1.0
        for _ in range(newton.max_halvings + 1):
            trial_phi, trial_E = phi + t * d_phi, E + t * d_E
            trial_F, trial_c = _residuals(trial_phi, trial_E)
            if not newton.damping or l2_norm(grid, trial_F) ** 2 + trial_c**2 <= (1.0 - 1e-4 * t) * merit:
                break
            t *= 0.5
        else:
            raise MaxIterExceeded(f"Line search failed in the amplitude-constrained solve for a={a:.4g}.")
        phi, E, F, c = trial_phi, trial_E, trial_F, trial_c
    if not np.all(np.isfinite(phi)):
        raise NonFiniteInput("The amplitude-constrained solve produced non-finite values.")
    state = StationaryState(
        E=float(E), phi=GridFunction(grid, phi), residual_norm=l2_norm(grid, F), iterations=iteration
    )
    return diagnostics(state, potential, params)


def default_amplitude(report: BifurcationReport, controls: Optional[BifurcationControls] = None) -> float:
    controls = controls or BifurcationControls()
    return controls.a0_factor * report.psi_star.phi.norm()


def fit_normal_form(
    report: BifurcationReport,
    potential: Potential,
    params: ProblemParams,
    a0: Optional[float] = None,
    controls: Optional[BifurcationControls] = None,
    newton: Optional[NewtonOptions] = None,
) -> NormalFormFit:
    """Least-squares slope of E(a) - E* against a^2 over a small amplitude sweep, compared with Q/2."""
    controls = controls or BifurcationControls()
    a0 = a0 if a0 is not None else default_amplitude(report, controls)
    amplitudes = tuple(factor * a0 for factor in controls.a0_sweep)
    E_values = []
    for a in amplitudes:
        state = solve_with_amplitude(
            report.psi_star, report.phi_star, a, potential, params, report.E_star + 0.5 * report.Q * a**2, newton
        )
        E_values.append(state.E)
    slope = float(np.polyfit(np.square(amplitudes), np.array(E_values) - report.E_star, 1)[0])
    expected = 0.5 * report.Q
    relative = abs(slope - expected) / max(abs(expected), np.finfo(float).tiny)
    within = relative <= controls.normal_form_tol
    if not within:
        _logger.warning(f"Normal-form slope {slope:.6g} differs from Q/2={expected:.6g} by {100 * relative:.1f}%")
    return NormalFormFit(amplitudes, tuple(E_values), slope, expected, float(relative), bool(within))


def branch_switch(
    report: BifurcationReport,
    a0: float,
    direction: int,
    potential: Potential,
    params: ProblemParams,
    E_target: float,
    controls: Optional[ContinuationControls] = None,
    newton: Optional[NewtonOptions] = None,
    bifurcation_controls: Optional[BifurcationControls] = None,
) -> Branch:
    """Step onto an asymmetric branch at amplitude direction * a0 and continue it without symmetry constraint."""
    bifurcation_controls = bifurcation_controls or BifurcationControls()
    if report.classification == Classification.DEGENERATE:
        raise DegenerateLambdaPrime("Cannot switch branches at a degenerate crossing.")
    if direction not in (-1, 1):
        raise InvalidParameters(f"The switch direction must be +1 or -1, got {direction}.")
    if (E_target - report.E_star) * report.Q <= 0:
        raise InvalidParameters(f"With Q={report.Q:.4g} the asymmetric branch cannot be continued towards {E_target}.")
    a = direction * a0
    state = solve_with_amplitude(
        report.psi_star, report.phi_star, a, potential, params, report.E_star + 0.5 * report.Q * a0**2, newton
    )
    if state.phi.antisymmetric_part().norm() <= bifurcation_controls.symmetric_tol * state.phi.norm():
        raise FellBackToSymmetric(f"The switched state at a={a:.4g} is even; a0 is too small or the crossing spurious.")
    symmetry = BranchSymmetry.ASYMMETRIC_PLUS if state.x_cm > 0 else BranchSymmetry.ASYMMETRIC_MINUS
    _logger.info(f"Switched onto {symmetry.value} at E={state.E:.10g} (x_cm={state.x_cm:.4g})")
    return continue_branch(
        state,
        E_target,
        potential,
        params,
        controls=controls,
        newton=(newton or NewtonOptions()).with_parity(Parity.ANY),
        symmetry=symmetry,
        provenance=Provenance.FROM_BRANCH_SWITCH,
        label=symmetry.value,
    )


def compute_a_star(psi_star: StationaryState, modes: LinearModes, params: ProblemParams) -> AStar:
    """Projection of psi* on the linear ground state and its small-splitting estimate.

    The estimate is ((E0 - E1) / (-lambda'_0 (-sigma) |psi0|_{2p+2}^{2p+2}))^{1/2p} with lambda'_0 the zero-amplitude
    slope of the second L+ eigenvalue.
    """
    grid = psi_star.grid
    psi = psi_star.phi if modes.grid == grid else psi_star.phi.resampled(modes.grid)
    overlap = modes.psi0.inner(psi)
    odd_overlap = np.nan if modes.psi1 is None else modes.psi1.inner(psi)
    estimate = np.nan
    if modes.splitting is not None:
        slope0 = linear_lambda_prime(modes, params.p)
        denominator = -slope0 * -params.sigma * modes.norm_2p2(params.p)
        if denominator > 0 and modes.splitting > 0:
            estimate = (modes.splitting / denominator) ** (1.0 / (2 * params.p))
    return AStar(float(overlap), float(estimate), float(odd_overlap))


def critical_power() -> float:
    """Power where the large-separation limit of R changes sign."""
    return 0.5 * (3.0 + np.sqrt(13.0))


def r_limit_numerator(p: float) -> float:
    return -(p**2) + 3.0 * p + 1.0


def large_separation_limits(p: float, sigma: float, norm_2p2: float) -> LargeSeparationLimits:
    """s -> infinity limits of lambda'(E*), a*^{2-2p} Q and a*^{2p-2} R in section1 units.

    ``norm_2p2`` is |psi0|_{2p+2}^{2p+2} of the normalized single-well ground state.
    """
    if sigma >= 0:
        raise InvalidParameters(f"The limits are defined for sigma < 0, got {sigma}.")
    Q = -sigma * 2.0 ** (2.0 - p) / 3.0 * (2 * p + 1) * (p + 1) * norm_2p2
    R = 2.0**p * r_limit_numerator(p) / (-sigma * (2 * p + 1) * (p + 1) * p * norm_2p2)
    return LargeSeparationLimits(-2.0 * p, float(Q), float(R))


def _rebuild_on(branch: Branch, grid, potential, params, newton: NewtonOptions) -> Branch:
    """Re-solve every branch state on another grid, seeded from the resampled states."""
    newton = newton.with_parity(Parity.EVEN)
    points = []
    for point in branch.points:
        state = newton_solve(point.state.phi.resampled(grid), point.E, potential, params, newton)
        points.append(replace(point, state=state))
    return replace(branch, points=points)


def analyse_pitchfork(
    branch: Branch,
    potential: Potential,
    params: ProblemParams,
    modes: Optional[LinearModes] = None,
    controls: Optional[BifurcationControls] = None,
    newton: Optional[NewtonOptions] = None,
    normal_form: bool = True,
) -> Union[BifurcationReport, NoCrossing]:
    """Locate and refine E*, then evaluate lambda', N', Q, R, a* and the classification."""
    controls = controls or BifurcationControls()
    newton = newton or NewtonOptions()
    if branch.symmetry != BranchSymmetry.EVEN:
        raise InvalidParameters(f"The pitchfork analysis needs an even branch, got {branch.symmetry.value}.")
    located = locate_crossing(branch)
    if isinstance(located, NoCrossing):
        return located
    refined = False
    try:
        E_star, psi_star, phi_star = refine_E_star(located, branch, potential, params, newton, controls)
    except BracketLost as err:
        if not controls.retry_refined:
            raise
        grid = branch.grid.refined(2)
        _logger.warning(f"{err} Retrying once at dx={grid.dx:.4g}.")
        near = replace(branch, points=[branch.point_at(located.E_lo), branch.point_at(located.E_hi)])
        E_star, psi_star, phi_star = refine_E_star(
            located, _rebuild_on(near, grid, potential, params, newton), potential, params, newton, controls
        )
        refined = True
        if modes is not None:
            modes = solve_linear_modes(potential, grid, params=params)
    E_floor = modes.E0 if modes is not None else float(branch.E[0])
    lam = _odd_lambda(psi_star, potential, params)[0]
    lambda_prime = compute_lambda_prime(psi_star, phi_star, potential, params, newton, E_floor, controls)
    N_prime = compute_N_prime(psi_star, potential, params, newton, E_floor)
    if abs(lambda_prime.integral) < controls.nondegeneracy_tol:
        classification, rationale = classify(np.nan, np.nan, lambda_prime.integral, controls.nondegeneracy_tol)
        return BifurcationReport(
            E_star=E_star,
            psi_star=psi_star,
            phi_star=phi_star,
            lambda_prime=lambda_prime.integral,
            Q=np.nan,
            R=np.nan,
            N_prime=N_prime.linear,
            classification=classification,
            rationale=rationale,
            params=params,
            lambda_at_star=lam,
            lambda_prime_estimates=lambda_prime,
            N_prime_estimates=N_prime,
            refined_grid=refined,
        )
    q_terms = compute_Q(psi_star, phi_star, lambda_prime.integral, potential, params, controls)
    R = compute_R(q_terms.Q, lambda_prime.integral, N_prime.linear)
    classification, rationale = classify(q_terms.Q, R, lambda_prime.integral, controls.nondegeneracy_tol)
    report = BifurcationReport(
        E_star=E_star,
        psi_star=psi_star,
        phi_star=phi_star,
        lambda_prime=lambda_prime.integral,
        Q=q_terms.Q,
        R=R,
        N_prime=N_prime.linear,
        classification=classification,
        rationale=rationale,
        params=params,
        lambda_at_star=lam,
        lambda_prime_estimates=lambda_prime,
        N_prime_estimates=N_prime,
        Q_terms=q_terms,
        refined_grid=refined,
    )
    if modes is not None and modes.psi1 is not None:
        report.a_star = compute_a_star(psi_star, modes, params)
    if normal_form:
        report.normal_form = fit_normal_form(report, potential, params, controls=controls, newton=newton)
    _logger.info(f"Bifurcation at E*={E_star:.8g}: {rationale}")
    return report
