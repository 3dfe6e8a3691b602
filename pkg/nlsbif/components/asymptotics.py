"""Large-E behaviour: concentration at critical points of V and convergence to the explicit soliton.

All comparisons are made in section1 units, where states concentrated at x0 look like
R^{-1/p} u_inf((x - x0) / R) with R = (E + V(x0))^{-1/2}.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from nlsbif.components.continuation import Branch, BranchPoint, BranchSymmetry, Provenance
from nlsbif.components.stationary import (
    newton_solve,
    NewtonOptions,
    seed_soliton_at,
    soliton,
    soliton_width,
    StationaryState,
)
from nlsbif.components.sweep import Sweep
from nlsbif.discretization.grid import Grid, GridFunction, quadrature
from nlsbif.operators.banded import Parity
from nlsbif.operators.schrodinger import assemble_Lplus, lowest_eigenpairs, ProblemParams
from nlsbif.potentials.potentials import Potential
from nlsbif.utilities.exceptions import (
    DivergedToZero,
    InvalidParameters,
    NotCriticalPoint,
    NumericalError,
    UnderResolved,
    WindowTooNarrow,
)
from nlsbif.utilities.utils import finite_difference, loglog_fit

_logger = logging.getLogger(__name__)

REFERENCE_GRID = Grid.from_spacing(20.0, 0.01)


def soliton_profile(p: float, sigma: float, grid: Grid = REFERENCE_GRID) -> GridFunction:
    return GridFunction(grid, soliton(grid.nodes, p, sigma))


def rescale_state(
    state: StationaryState, x0: float, potential: Potential, params: ProblemParams, grid: Grid = REFERENCE_GRID
) -> GridFunction:
    """u(y) = R^{1/p} phi(x0 + R y), cubic interpolation onto ``grid``; zero beyond the computational box."""
    R = soliton_width(x0, state.E, potential, params)
    nodes = state.grid.nodes
    x = x0 + R * grid.nodes
    inside = np.abs(x) <= state.grid.half_width
    values = np.zeros(grid.n)
    values[inside] = CubicSpline(nodes, state.phi.values)(x[inside])
    return GridFunction(grid, R ** (1.0 / params.p) * values)


def profile_distance(state: StationaryState, x0: float, potential: Potential, params: ProblemParams) -> float:
    """Sup distance between the rescaled state and u_inf."""
    u = rescale_state(state, x0, potential, params)
    reference = soliton_profile(params.p, params.section1_sigma)
    return float(np.max(np.abs(u.values - reference.values)))


def resolved_grid(grid: Grid, R: float, min_resolution: float = 8.0) -> Grid:
    """Halve dx until the soliton width spans at least ``min_resolution`` cells."""
    while R / grid.dx < min_resolution:
        grid = grid.refined(2)
    return grid


def _check_critical_point(x0: float, potential: Potential, tol: float = 1e-8) -> float:
    slope = float(potential.first_derivative(np.array([x0]))[0])
    curvature = float(potential.second_derivative(np.array([x0]))[0])
    if abs(slope) > tol:
        raise NotCriticalPoint(f"V'({x0}) = {slope:.3e} is not zero.")
    if curvature == 0.0:
        raise NotCriticalPoint(f"V''({x0}) vanishes; the critical point is degenerate.")
    return curvature


def _localized_solve(
    E: float, x0: float, potential: Potential, params: ProblemParams, grid: Grid, newton: NewtonOptions
) -> StationaryState:
    parity = Parity.EVEN if x0 == 0.0 else Parity.ANY
    seed = seed_soliton_at(x0, E, potential, params, grid)
    return newton_solve(seed, E, potential, params, newton.with_parity(parity))


def scaling_sweep(
    E_values: Sequence[float],
    potential: Potential,
    params: ProblemParams,
    grid: Grid,
    x0: float = 0.0,
    newton: Optional[NewtonOptions] = None,
    min_resolution: float = 8.0,
    workers: int = 1,
) -> Branch:
    """States at each E from the rescaled-soliton seed, each on a grid fine enough for its width."""
    newton = newton or NewtonOptions()

    def _solve(E: float) -> BranchPoint:
        R = soliton_width(x0, E, potential, params)
        state = _localized_solve(E, x0, potential, params, resolved_grid(grid, R, min_resolution), newton)
        return BranchPoint(state=state, lplus_spectrum=None)

    points = Sweep(simultaneous_tasks=workers, name="scaling").run(_solve, sorted(E_values))
    symmetry = BranchSymmetry.EVEN if x0 == 0.0 else BranchSymmetry.ASYMMETRIC_PLUS
    if x0 < 0:
        symmetry = BranchSymmetry.ASYMMETRIC_MINUS
    return Branch(
        label=f"scaling_x0_{x0:g}",
        symmetry=symmetry,
        provenance=Provenance.FROM_SOLITON_SEED,
        points=list(points),
        params=params,
        potential=potential,
    )


class ScalingQuantity(Enum):
    NORM_2P2 = "norm_2p2"
    N = "N"
    GRAD_NORM2 = "grad_norm2"

    def expected_exponent(self, p: float) -> float:
        if self == ScalingQuantity.N:
            return 1.0 / p - 0.5
        return 0.5 + 1.0 / p


class ScalingFit(NamedTuple):
    quantity: ScalingQuantity
    exponent_expected: float
    exponent_fitted: float
    prefactor_fitted: float
    b_estimate: float
    E_window: Tuple[float, float]
    r2: float


@dataclass
class ScalingSummary:
    fits: List[ScalingFit]
    ratio_N: float
    ratio_N_expected: float
    ratio_grad: float
    ratio_grad_expected: float
    dropped: List[float] = field(default_factory=list)
    profile_distances: List[float] = field(default_factory=list)

    @property
    def ratio_N_residual(self) -> float:
        return abs(self.ratio_N - self.ratio_N_expected) / abs(self.ratio_N_expected)

    @property
    def ratio_grad_residual(self) -> float:
        return abs(self.ratio_grad - self.ratio_grad_expected) / abs(self.ratio_grad_expected)

    def fit(self, quantity: ScalingQuantity) -> ScalingFit:
        return next(f for f in self.fits if f.quantity == quantity)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "quantity": f.quantity.value,
                "exponent_expected": f.exponent_expected,
                "exponent_fitted": f.exponent_fitted,
                "prefactor_fitted": f.prefactor_fitted,
                "b_estimate": f.b_estimate,
                "E_min": f.E_window[0],
                "E_max": f.E_window[1],
                "r2": f.r2,
            }
            for f in self.fits
        ]
        return pd.DataFrame(rows)

    def to_record(self) -> dict:
        return {
            "fits": self.to_frame().to_dict(orient="records"),
            "ratio_N": self.ratio_N,
            "ratio_N_expected": self.ratio_N_expected,
            "ratio_N_residual": self.ratio_N_residual,
            "ratio_grad": self.ratio_grad,
            "ratio_grad_expected": self.ratio_grad_expected,
            "ratio_grad_residual": self.ratio_grad_residual,
            "dropped": list(self.dropped),
        }


def fit_scaling(
    branch: Branch,
    window: Sequence[float],
    x0: float = 0.0,
    min_resolution: float = 8.0,
    distortion_limit: float = 0.1,
) -> ScalingSummary:
    """Log-log fits of |psi|_{2p+2}^{2p+2}, N and |psi'|^2 against E in section1 units."""
    params = branch.params
    potential = branch.potential
    p, sigma = params.p, params.section1_sigma
    E_run = branch.E
    E = np.array([params.to_section1_E(e) for e in E_run])
    selected = (E_run >= window[0]) & (E_run <= window[1])
    depth = float(np.max(np.abs(potential.on_grid(branch.grid)))) if not potential.is_free else 0.0
    widths = np.array([soliton_width(x0, e, potential, params) for e in E_run])
    selected &= depth * widths**2 <= distortion_limit
    if not selected.any() or E[selected].max() < 10.0 * E[selected].min():
        raise WindowTooNarrow(f"The fit window {tuple(window)} does not span a decade of resolved E values.")
    resolution = np.array([w / point.state.grid.dx for w, point in zip(widths, branch.points)])
    unresolved = selected & (resolution < min_resolution)
    dropped = [float(e) for e in E_run[unresolved]]
    if dropped:
        _logger.warning(f"Dropping {len(dropped)} under-resolved states (R/dx < {min_resolution}) at E={dropped}")
    selected &= ~unresolved
    if selected.sum() < 3:
        raise UnderResolved(f"Only {int(selected.sum())} resolved states remain in the fit window.")
    states = [point.state for point, keep in zip(branch.points, selected) if keep]
    E_fit = E[selected]
    values = {
        ScalingQuantity.NORM_2P2: np.array([s.norm_2p2 for s in states]),
        ScalingQuantity.N: np.array([s.N for s in states]),
        ScalingQuantity.GRAD_NORM2: np.array([s.grad_norm2 for s in states]),
    }
    fits = []
    for quantity, y in values.items():
        exponent, prefactor, r2 = loglog_fit(E_fit, y)
        expected = quantity.expected_exponent(p)
        fits.append(
            ScalingFit(
                quantity=quantity,
                exponent_expected=expected,
                exponent_fitted=exponent,
                prefactor_fitted=prefactor,
                b_estimate=float(y[-1] / E_fit[-1] ** expected),
                E_window=(float(E_run[selected].min()), float(E_run[selected].max())),
                r2=r2,
            )
        )
    top = states[-1]
    distances = [profile_distance(s, x0, potential, params) for s in states]
    summary = ScalingSummary(
        fits=fits,
        ratio_N=top.N / top.norm_2p2 * E_fit[-1],
        ratio_N_expected=-sigma / 2.0 * (p + 2) / (p + 1),
        ratio_grad=top.grad_norm2 / top.norm_2p2,
        ratio_grad_expected=-sigma / 2.0 * p / (p + 1),
        dropped=dropped,
        profile_distances=distances,
    )
    _logger.info(
        "Scaling exponents: "
        + ", ".join(f"{f.quantity.value}={f.exponent_fitted:.4f} (expected {f.exponent_expected:.4f})" for f in fits)
    )
    return summary


def scaling_frame(branch: Branch, x0: float = 0.0) -> pd.DataFrame:
    params, potential = branch.params, branch.potential
    rows = []
    for point in branch.points:
        state = point.state
        rows.append(
            {
                "E": state.E,
                "R": soliton_width(x0, state.E, potential, params),
                "dx": state.grid.dx,
                "N": state.N,
                "norm_2p2": state.norm_2p2,
                "grad_norm2": state.grad_norm2,
                "profile_distance": profile_distance(state, x0, potential, params),
            }
        )
    return pd.DataFrame(rows)


class SolitonNorms(NamedTuple):
    mass: float
    gradient: float
    second_moment: float


def soliton_norms(p: float, sigma: float, grid: Grid = REFERENCE_GRID) -> SolitonNorms:
    """|u_inf|^2, |u_inf'|^2 and |y u_inf|^2; u_inf' = -tanh(p y) u_inf."""
    u = soliton(grid.nodes, p, sigma)
    du = -np.tanh(p * grid.nodes) * u
    return SolitonNorms(
        quadrature(grid, u**2), quadrature(grid, du**2), quadrature(grid, (grid.nodes * u) ** 2)
    )


@dataclass
class LocalizedReport:
    x0: float
    curvature: float
    rows: pd.DataFrame
    lambda_coefficient: float
    lambda_coefficient_expected: float
    mass_coefficient: float
    mass_coefficient_expected: float

    @property
    def kind(self) -> str:
        return "maximum" if self.curvature < 0 else "minimum"

    @property
    def slope_sign_matches(self) -> bool:
        return bool(np.sign(self.lambda_coefficient) == np.sign(self.curvature))

    @property
    def lambda_relative_error(self) -> float:
        return abs(self.lambda_coefficient - self.lambda_coefficient_expected) / abs(self.lambda_coefficient_expected)

    def to_record(self) -> dict:
        return {
            "x0": self.x0,
            "kind": self.kind,
            "curvature": self.curvature,
            "lambda_coefficient": self.lambda_coefficient,
            "lambda_coefficient_expected": self.lambda_coefficient_expected,
            "lambda_relative_error": self.lambda_relative_error,
            "slope_sign_matches": self.slope_sign_matches,
            "mass_coefficient": self.mass_coefficient,
            "mass_coefficient_expected": self.mass_coefficient_expected,
            "n_negative": sorted({int(n) for n in self.rows["n_negative"]}),
            "stability": sorted(set(self.rows["stability"])),
        }


def _through_origin(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.dot(x, y) / np.dot(x, x))


def localized_branch_check(
    x0: float,
    potential: Potential,
    params: ProblemParams,
    E_list: Sequence[float],
    grid: Grid,
    newton: Optional[NewtonOptions] = None,
    min_resolution: float = 8.0,
    workers: int = 1,
) -> LocalizedReport:
    """L+ counts, second eigenvalue and mass along the branch concentrating at the critical point x0.

    In rescaled variables the second L+ eigenvalue behaves like (V''(x0)/2) |u_inf|^2 / |u_inf'|^2 R^4 and the mass
    defect like (1/2p - 3/4) V''(x0) |y u_inf|^2 R^4. All states share one grid so that dN/dE is consistent.
    """
    if len(E_list) < 3:
        raise InvalidParameters(f"The localized check needs at least three E values, got {len(E_list)}.")
    curvature = _check_critical_point(x0, potential)
    newton = newton or NewtonOptions()
    c, p = params.kinetic_factor, params.p
    E_values = np.sort(np.asarray(E_list, dtype=float))
    widths = np.array([soliton_width(x0, E, potential, params) for E in E_values])
    common = resolved_grid(grid, widths.min(), min_resolution)

    def _solve(E: float) -> Tuple[StationaryState, np.ndarray, int]:
        state = _localized_solve(E, x0, potential, params, common, newton)
        lplus = assemble_Lplus(state.phi, E, potential, params)
        spectrum = lowest_eigenpairs(lplus, common, k=2, continuum_edge=E)
        return state, spectrum.eigenvalues, spectrum.n_negative

    results = Sweep(simultaneous_tasks=workers, name="localized").run(_solve, list(E_values))
    N = np.array([state.N for state, _, _ in results])
    dN = finite_difference(E_values, N)
    rows = []
    for E, R, (state, eigenvalues, n_negative), slope in zip(E_values, widths, results, dN):
        if n_negative >= 2:
            stability = "unstable"
        else:
            stability = "stable" if slope > 0 else "unstable"
        rows.append(
            {
                "E": E,
                "R": R,
                "n_negative": n_negative,
                "lambda2": eigenvalues[1],
                "lambda_rescaled": R**2 * eigenvalues[1] / c,
                "mass": R ** (2.0 / p - 1.0) * state.N,
                "N": state.N,
                "x_cm": state.x_cm,
                "dN_dE": slope,
                "stability": stability,
            }
        )
    frame = pd.DataFrame(rows)
    norms = soliton_norms(p, params.section1_sigma)
    R4 = frame["R"].to_numpy() ** 4
    report = LocalizedReport(
        x0=x0,
        curvature=curvature,
        rows=frame,
        lambda_coefficient=_through_origin(R4, frame["lambda_rescaled"].to_numpy()),
        lambda_coefficient_expected=0.5 * curvature * norms.mass / norms.gradient,
        mass_coefficient=_through_origin(R4, frame["mass"].to_numpy() - norms.mass),
        mass_coefficient_expected=(1.0 / (2 * p) - 0.75) * curvature * norms.second_moment,
    )
    _logger.info(
        f"Localized branch at x0={x0:.6g} ({report.kind}): n_negative={sorted(set(frame['n_negative']))}, "
        f"lambda coefficient {report.lambda_coefficient:.4g} vs {report.lambda_coefficient_expected:.4g}"
    )
    return report


class ProbeOutcome(Enum):
    PINNED = "pinned"
    DRIFTED = "drifted"
    COLLAPSED = "collapsed"
    FAILED = "failed"
    NEUTRAL = "neutral"
    UNRESOLVED = "unresolved"


class ProbeResult(NamedTuple):
    outcome: ProbeOutcome
    x0: float
    R: float
    x_cm: float
    message: str

    @property
    def pinned(self) -> bool:
        return self.outcome == ProbeOutcome.PINNED


def nonexistence_probe(
    x0: float,
    potential: Potential,
    params: ProblemParams,
    E: float,
    grid: Grid,
    newton: Optional[NewtonOptions] = None,
    min_resolution: float = 8.0,
) -> ProbeResult:
    """Try to pin a concentrated state at x0; every outcome is data, never an error."""
    newton = (newton or NewtonOptions()).with_parity(Parity.ANY)
    if potential.is_free:
        # translations are an exact kernel of L+
        newton = replace(newton, jacobian_guard=0.0)
    R = soliton_width(x0, E, potential, params)
    fine = resolved_grid(grid, R, min_resolution)
    try:
        state = newton_solve(seed_soliton_at(x0, E, potential, params, fine), E, potential, params, newton)
    except DivergedToZero as err:
        return ProbeResult(ProbeOutcome.COLLAPSED, x0, R, np.nan, str(err))
    except NumericalError as err:
        return ProbeResult(ProbeOutcome.FAILED, x0, R, np.nan, str(err))
    drift = abs(state.x_cm - x0)
    if potential.is_free:
        outcome = ProbeOutcome.NEUTRAL
    elif drift < 0.5 * R:
        outcome = ProbeOutcome.PINNED
    elif drift > 2.0 * R:
        outcome = ProbeOutcome.DRIFTED
    else:
        outcome = ProbeOutcome.UNRESOLVED
    message = f"x_cm={state.x_cm:.6g}, |x_cm - x0|={drift:.3e}, R={R:.3e}"
    _logger.info(f"Probe at x0={x0:.6g}, E={E:.6g}: {outcome.value} ({message})")
    return ProbeResult(outcome, x0, R, float(state.x_cm), message)
