import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from nlsbif.algorithm import get_predictor
from nlsbif.components.stationary import (
    newton_solve,
    NewtonOptions,
    seed_from_linear,
    StationaryState,
    Symmetry,
)
from nlsbif.discretization.grid import Grid, inner, l2_norm
from nlsbif.operators.banded import Parity, parity_solve
from nlsbif.operators.schrodinger import (
    assemble_Lminus,
    assemble_Lplus,
    linear_operator,
    LinearizedSpectrum,
    lowest_eigenpairs,
    OperatorTag,
    ProblemParams,
)
from nlsbif.potentials.linear_modes import LinearModes
from nlsbif.potentials.potentials import Potential
from nlsbif.utilities.exceptions import (
    DivergedToZero,
    InvalidParameters,
    MissingSpectrum,
    NumericalError,
    StateCollapsed,
    StepUnderflow,
    WindowTooNarrow,
)
from nlsbif.utilities.utils import finite_difference, loglog_fit, sign_changes

_logger = logging.getLogger(__name__)


class BranchSymmetry(Enum):
    EVEN = "even"
    ASYMMETRIC_PLUS = "asymmetric_plus"
    ASYMMETRIC_MINUS = "asymmetric_minus"
    ODD = "odd"

    @property
    def parity(self) -> Parity:
        if self == BranchSymmetry.EVEN:
            return Parity.EVEN
        if self == BranchSymmetry.ODD:
            return Parity.ODD
        return Parity.ANY

    def mirrored(self) -> "BranchSymmetry":
        if self == BranchSymmetry.ASYMMETRIC_PLUS:
            return BranchSymmetry.ASYMMETRIC_MINUS
        if self == BranchSymmetry.ASYMMETRIC_MINUS:
            return BranchSymmetry.ASYMMETRIC_PLUS
        return self


class Provenance(Enum):
    FROM_LINEAR_MODE = "from_linear_mode"
    FROM_BRANCH_SWITCH = "from_branch_switch"
    FROM_SOLITON_SEED = "from_soliton_seed"


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


class StabilityVerdict(NamedTuple):
    stability: Stability
    reason: str


@dataclass(frozen=True)
class ContinuationControls:
    dE_initial: float = 1e-3
    dE_min: float = 1e-7
    dE_max: float = 0.25
    growth: float = 1.3
    fast_iterations: int = 4
    predictor_order: int = 1
    continuity_factor: float = 10.0
    clamp_near_crossing: bool = True
    clamp_floor: float = 1e-6
    spectrum_k: int = 2
    negative_tol: float = 1e-8
    max_points: int = 100_000

    def __post_init__(self) -> None:
        if not 0 < self.dE_min <= self.dE_max:
            raise InvalidParameters("Steps must satisfy 0 < dE_min <= dE_max.", key="continuation.dE_min")
        if not self.growth >= 1.0:
            raise InvalidParameters(f"Step growth must be at least 1, got {self.growth}.", key="continuation.growth")
        if not self.continuity_factor > 1.0:
            raise InvalidParameters(
                f"continuity_factor must exceed 1, got {self.continuity_factor}.", key="continuation.continuity_factor"
            )


@dataclass(frozen=True)
class BranchPoint:
    state: StationaryState
    lplus_spectrum: Optional[LinearizedSpectrum]
    lminus_lowest: float = np.nan
    lminus_correlation: float = np.nan
    dN_dE: Optional[float] = None
    dlambda_dE: Optional[float] = None
    dN_dE_linear: Optional[float] = None
    dnorm_dE: Optional[float] = None
    dnorm_residual: Optional[float] = None
    energy_identity_residual: Optional[float] = None
    dpsi_discrepancy: Optional[float] = None

    @property
    def E(self) -> float:
        return self.state.E

    @property
    def lambda0(self) -> float:
        return self.lplus_spectrum.lowest if self.lplus_spectrum is not None else np.nan

    @property
    def lambda1(self) -> float:
        if self.lplus_spectrum is None or len(self.lplus_spectrum.eigenvalues) < 2:
            return np.nan
        return float(self.lplus_spectrum.eigenvalues[1])

    @property
    def n_negative(self) -> Optional[int]:
        return None if self.lplus_spectrum is None else self.lplus_spectrum.n_negative

    def reflected(self) -> "BranchPoint":
        state = replace(self.state, phi=self.state.phi.reflect(), x_cm=-self.state.x_cm)
        spectrum = self.lplus_spectrum
        if spectrum is not None:
            spectrum = replace(spectrum, eigenfunctions=[f.reflect() for f in spectrum.eigenfunctions])
        return replace(self, state=state, lplus_spectrum=spectrum)


_COLUMNS = [
    "E",
    "N",
    "norm_2p2",
    "grad_norm2",
    "energy",
    "lambda0",
    "lambda1",
    "lminus0",
    "x_cm",
    "residual",
    "pohozaev_residual",
    "stationarity_residual",
    "stability",
    "dN_dE",
    "dlambda_dE",
]


@dataclass
class Branch:
    label: str
    symmetry: BranchSymmetry
    provenance: Provenance
    points: List[BranchPoint] = field(default_factory=list)
    params: ProblemParams = field(default_factory=ProblemParams)
    potential: Optional[Potential] = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def grid(self) -> Grid:
        return self.points[0].state.grid

    @property
    def E(self) -> np.ndarray:
        return np.array([point.E for point in self.points])

    @property
    def N(self) -> np.ndarray:
        return np.array([point.state.N for point in self.points])

    @property
    def lambda0(self) -> np.ndarray:
        return np.array([point.lambda0 for point in self.points])

    @property
    def lambda1(self) -> np.ndarray:
        return np.array([point.lambda1 for point in self.points])

    @property
    def x_cm(self) -> np.ndarray:
        return np.array([point.state.x_cm for point in self.points])

    def point_at(self, E: float) -> BranchPoint:
        return self.points[int(np.argmin(np.abs(self.E - E)))]

    def reflected(self, label: Optional[str] = None) -> "Branch":
        return replace(
            self,
            label=label or f"{self.label}_mirror",
            symmetry=self.symmetry.mirrored(),
            points=[point.reflected() for point in self.points],
        )

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for point in self.points:
            state = point.state
            verdict = stability_classify(point) if _has_stability_data(point) else None
            rows.append(
                {
                    "E": state.E,
                    "N": state.N,
                    "norm_2p2": state.norm_2p2,
                    "grad_norm2": state.grad_norm2,
                    "energy": state.energy,
                    "lambda0": point.lambda0,
                    "lambda1": point.lambda1,
                    "lminus0": point.lminus_lowest,
                    "x_cm": state.x_cm,
                    "residual": state.residual_norm,
                    "pohozaev_residual": state.relative_pohozaev,
                    "stationarity_residual": state.relative_stationarity,
                    "stability": verdict.stability.value if verdict else "",
                    "dN_dE": np.nan if point.dN_dE is None else point.dN_dE,
                    "dlambda_dE": np.nan if point.dlambda_dE is None else point.dlambda_dE,
                }
            )
        return pd.DataFrame(rows, columns=_COLUMNS)

    def metadata(self) -> Dict[str, Any]:
        grid = self.grid if self.points else None
        return {
            "label": self.label,
            "symmetry": self.symmetry.value,
            "provenance": self.provenance.value,
            "potential": self.potential.to_dict() if self.potential is not None else None,
            "problem": self.params.to_dict(),
            "grid": None if grid is None else {"half_width": grid.half_width, "n": grid.n, "dx": grid.dx},
            "points": len(self.points),
        }


def _has_stability_data(point: BranchPoint) -> bool:
    return point.lplus_spectrum is not None and (point.n_negative != 1 or point.dN_dE is not None)


def analyse_state(
    state: StationaryState,
    potential: Potential,
    params: ProblemParams,
    controls: Optional[ContinuationControls] = None,
) -> BranchPoint:
    """Spectral data of an accepted state: the lowest L+ eigenpairs and the lowest L- eigenvalue."""
    controls = controls or ContinuationControls()
    grid = state.grid
    operator = linear_operator(potential, grid, params)
    lplus = assemble_Lplus(state.phi, state.E, potential, params, operator=operator)
    spectrum = lowest_eigenpairs(
        lplus, grid, k=controls.spectrum_k, continuum_edge=state.E, negative_tol=controls.negative_tol
    )
    lminus = assemble_Lminus(state.phi, state.E, potential, params, operator=operator)
    lminus_spectrum = lowest_eigenpairs(lminus, grid, k=1, operator_tag=OperatorTag.LMINUS, continuum_edge=state.E)
    norm = state.phi.norm()
    correlation = abs(lminus_spectrum.eigenfunctions[0].inner(state.phi)) / norm if norm > 0 else np.nan
    return BranchPoint(
        state=state,
        lplus_spectrum=spectrum,
        lminus_lowest=lminus_spectrum.lowest,
        lminus_correlation=correlation,
    )


def _default_symmetry(state: StationaryState) -> BranchSymmetry:
    if state.symmetry == Symmetry.EVEN:
        return BranchSymmetry.EVEN
    if state.symmetry == Symmetry.ODD:
        return BranchSymmetry.ODD
    return BranchSymmetry.ASYMMETRIC_PLUS if state.x_cm > 0 else BranchSymmetry.ASYMMETRIC_MINUS


def tangent_rate(state: StationaryState, potential: Potential, params: ProblemParams, parity: Parity) -> float:
    """|d phi / dE| at a converged state, from L+ d_E phi = -phi on the given parity."""
    lplus = assemble_Lplus(state.phi, state.E, potential, params)
    try:
        rate = l2_norm(state.grid, parity_solve(lplus, state.phi.values, parity))
    except NumericalError as err:
        _logger.debug(f"No tangent at E={state.E:.8g} ({err}); the first step is not continuity checked")
        return np.inf
    return rate if np.isfinite(rate) else np.inf


def _crossing_clamp(points: List[BranchPoint], direction: float, controls: ContinuationControls) -> float:
    """Largest step keeping the next point short of the predicted zero of the second L+ eigenvalue."""
    if len(points) < 2:
        return np.inf
    (E_a, lam_a), (E_b, lam_b) = [(p.E, p.lambda1) for p in points[-2:]]
    if not np.all(np.isfinite([lam_a, lam_b])) or E_a == E_b:
        return np.inf
    slope = (lam_b - lam_a) / (E_b - E_a)
    if lam_b * slope * direction >= 0 or slope == 0:
        return np.inf
    return max(abs(lam_b) / (2.0 * abs(slope)), controls.clamp_floor)


def continue_branch(
    start: StationaryState,
    E_target: float,
    potential: Potential,
    params: ProblemParams,
    controls: Optional[ContinuationControls] = None,
    newton: Optional[NewtonOptions] = None,
    symmetry: Optional[BranchSymmetry] = None,
    provenance: Provenance = Provenance.FROM_LINEAR_MODE,
    label: Optional[str] = None,
) -> Branch:
    """Natural-parameter continuation in E from a converged state to ``E_target``.

    Steps halve on failure and grow after fast convergence; every accepted point carries its L+ and L-
    spectral data. Points are returned in increasing E whichever way the sweep ran.
    """
    controls = controls or ContinuationControls()
    symmetry = symmetry or _default_symmetry(start)
    newton = (newton or NewtonOptions()).with_parity(symmetry.parity)
    if E_target == start.E:
        raise InvalidParameters("The continuation target must differ from the start value.", key="continuation.E_max")
    direction = float(np.sign(E_target - start.E))
    predictor = get_predictor(controls.predictor_order)
    label = label or f"{symmetry.value}_branch"
    branch = Branch(label=label, symmetry=symmetry, provenance=provenance, params=params, potential=potential)

    def _partial() -> Branch:
        points = branch.points if direction > 0 else branch.points[::-1]
        return replace(branch, points=list(points))

    branch.points.append(analyse_state(start, potential, params, controls))
    E_history, phi_history = [start.E], [start.phi]
    rate = tangent_rate(start, potential, params, symmetry.parity)
    dE = min(controls.dE_initial, controls.dE_max)
    _logger.info(f"Continuing {label} from E={start.E:.8g} towards E={E_target:.8g}")
    while E_history[-1] != E_target:
        if len(branch.points) >= controls.max_points:
            raise StepUnderflow(f"{label}: reached the maximum of {controls.max_points} points.", branch=_partial())
        E = E_history[-1]
        step = min(dE, abs(E_target - E))
        if controls.clamp_near_crossing and symmetry != BranchSymmetry.ODD:
            step = min(step, _crossing_clamp(branch.points, direction, controls))
        E_next = E_target if step >= abs(E_target - E) else E + direction * step
        if (step < controls.dE_min and E_next != E_target) or E_next == E:
            raise StepUnderflow(f"{label}: step {step:.3e} underflowed at E={E:.10g}.", branch=_partial())
        seed = predictor.predict(E_history, phi_history, E_next)
        try:
            state = newton_solve(seed, E_next, potential, params, newton)
            moved = l2_norm(state.grid, state.phi.values - phi_history[-1].values)
            if moved > controls.continuity_factor * rate * abs(E_next - E):
                if step > 2.0 * controls.dE_min:
                    raise NumericalError(
                        f"continuity bound violated ({moved:.3e} over dE={E_next - E:.3e}, expected rate {rate:.3e})"
                    )
                _logger.warning(f"{label}: continuity bound violated at the minimum step near E={E_next:.8g}")
            point = analyse_state(state, potential, params, controls)
        except DivergedToZero as err:
            raise StateCollapsed(f"{label}: the state collapsed to zero at E={E_next:.8g}.", branch=_partial()) from err
        except NumericalError as err:
            dE = step / 2.0
            _logger.debug(f"{label}: step to E={E_next:.10g} failed ({err}); halving to {dE:.3e}")
            if dE < controls.dE_min:
                raise StepUnderflow(
                    f"{label}: step fell below dE_min={controls.dE_min:.1e} at E={E:.10g} ({err}).", branch=_partial()
                ) from err
            continue
        branch.points.append(point)
        rate = moved / abs(E_next - E)
        E_history.append(E_next)
        phi_history.append(state.phi)
        dE = step * controls.growth if state.iterations <= controls.fast_iterations else step
        dE = min(dE, controls.dE_max)
        _logger.debug(
            f"{label}: accepted E={E_next:.10g} N={state.N:.6g} lambda1={point.lambda1:.4e} "
            f"({state.iterations} iterations, next dE={dE:.3e})"
        )
    _logger.info(f"{label}: {len(branch.points)} points on [{min(E_history):.6g}, {max(E_history):.6g}]")
    return _partial()


def trace_from_linear_mode(
    modes: LinearModes,
    E_target: float,
    potential: Potential,
    params: ProblemParams,
    controls: Optional[ContinuationControls] = None,
    newton: Optional[NewtonOptions] = None,
    mode: int = 0,
    offset: Optional[float] = None,
) -> Branch:
    """Start just off the linear eigenvalue on the nonlinear side and continue to ``E_target``.

    The default offset min(1e-3, 0.1 * (E0 - E1)) keeps the start inside the small-amplitude regime even when
    the two lowest levels are nearly degenerate.
    """
    controls = controls or ContinuationControls()
    E_mode = modes.E0 if mode == 0 else modes.E1
    if E_mode is None:
        raise InvalidParameters("The potential has no second bound state to continue from.")
    if offset is None:
        offset = 1e-3 if modes.splitting is None else min(1e-3, 0.1 * modes.splitting)
    E_start = E_mode - np.sign(params.sigma) * offset
    symmetry = BranchSymmetry.EVEN if mode == 0 else BranchSymmetry.ODD
    newton = (newton or NewtonOptions()).with_parity(symmetry.parity)
    start = newton_solve(seed_from_linear(modes, E_start, params, mode=mode), E_start, potential, params, newton)
    first = replace(controls, dE_initial=min(controls.dE_initial, max(offset, controls.dE_min)))
    return continue_branch(
        start,
        E_target,
        potential,
        params,
        controls=first,
        newton=newton,
        symmetry=symmetry,
        provenance=Provenance.FROM_LINEAR_MODE,
        label=f"{symmetry.value}_from_E{mode}",
    )


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


def branch_derivatives(branch: Branch, potential: Optional[Potential] = None) -> Branch:
    """Finite-difference N'(E) and lambda'(E) plus the cross-checks.

    dN/dE is also evaluated as 2 <psi, d_E psi> with d_E psi = -L+^{-1} psi, solved on the branch parity, and
    compared with the finite difference of the states. The identities d/dE |psi|_{2p+2}^{2p+2} = (p+1) N / (-sigma p)
    and d(energy)/dE = -E N' are recorded as relative residuals.
    """
    if len(branch.points) < 3:
        raise InvalidParameters(f"Derivatives need at least three points, got {len(branch.points)}.")
    potential = potential or branch.potential
    params = branch.params
    p, sigma = params.p, params.sigma
    E = branch.E
    states = [point.state for point in branch.points]
    dN = finite_difference(E, branch.N)
    dlam = finite_difference(E, branch.lambda1)
    dnorm = finite_difference(E, [s.norm_2p2 for s in states])
    denergy = finite_difference(E, [s.energy for s in states])
    dphi = finite_difference(E, np.stack([s.phi.values for s in states]))
    grid = branch.grid
    operator = linear_operator(potential, grid, params)
    points = []
    for i, (point, state) in enumerate(zip(branch.points, states)):
        lplus = assemble_Lplus(state.phi, state.E, potential, params, operator=operator)
        try:
            dpsi = -parity_solve(lplus, state.phi.values, branch.symmetry.parity)
            dN_linear = 2.0 * inner(grid, state.phi.values, dpsi)
            discrepancy = l2_norm(grid, dphi[i] - dpsi) / max(l2_norm(grid, dpsi), np.finfo(float).tiny)
        except NumericalError as err:
            _logger.warning(f"{branch.label}: linear-solve derivative failed at E={state.E:.8g}: {err}")
            dN_linear, discrepancy = np.nan, np.nan
        expected_dnorm = (p + 1) * state.N / (-sigma * p)
        points.append(
            replace(
                point,
                dN_dE=float(dN[i]),
                dlambda_dE=float(dlam[i]),
                dN_dE_linear=float(dN_linear),
                dnorm_dE=float(dnorm[i]),
                dnorm_residual=_relative(float(dnorm[i]), expected_dnorm),
                energy_identity_residual=_relative(float(denergy[i]), -state.E * float(dN[i])),
                dpsi_discrepancy=float(discrepancy),
            )
        )
    return replace(branch, points=points)


def stability_classify(point: BranchPoint, slope_tol: float = 1e-8) -> StabilityVerdict:
    """Negative-direction count of L+ and, with exactly one, the sign of dN/dE."""
    if point.lplus_spectrum is None:
        raise MissingSpectrum(f"No L+ spectrum recorded at E={point.E:.8g}.")
    n_negative = point.n_negative
    if n_negative >= 2:
        return StabilityVerdict(Stability.UNSTABLE, "two_negative_directions")
    if n_negative == 0:
        return StabilityVerdict(Stability.STABLE, "no_negative_direction")
    if point.dN_dE is None or not np.isfinite(point.dN_dE):
        raise MissingSpectrum(f"No dN/dE recorded at E={point.E:.8g}; run branch_derivatives first.")
    if abs(point.dN_dE) < slope_tol:
        return StabilityVerdict(Stability.INDETERMINATE, "slope_below_tolerance")
    if point.dN_dE > 0:
        return StabilityVerdict(Stability.STABLE, "slope_positive")
    return StabilityVerdict(Stability.UNSTABLE, "slope_negative")


def slope_sign_changes(branch: Branch) -> np.ndarray:
    """E values where dN/dE changes sign, interpolated between points."""
    slopes = [np.nan if p.dN_dE is None else p.dN_dE for p in branch.points]
    if np.any(np.isnan(slopes)):
        raise MissingSpectrum(f"{branch.label}: dN/dE missing; run branch_derivatives first.")
    return sign_changes(branch.E, slopes)


class SmallAmplitudeFit(NamedTuple):
    slope: float
    prefactor: float
    r2: float
    slope_expected: float
    prefactor_expected: float


def fit_small_amplitude_law(
    branch: Branch, modes: LinearModes, window: Sequence[float] = (1e-3, 1e-1), mode: int = 0
) -> SmallAmplitudeFit:
    """Fit log N against log |E - E_k| near the linear level; N ~ (|E - E_k| / (-sigma |psi_k|^{2p+2}))^{1/p}."""
    params = branch.params
    E_k = modes.E0 if mode == 0 else modes.E1
    distance = np.abs(branch.E - E_k)
    selected = (distance >= window[0]) & (distance <= window[1])
    if selected.sum() < 3:
        raise WindowTooNarrow(f"Only {int(selected.sum())} points with |E - E_{mode}| in {tuple(window)}.")
    slope, prefactor, r2 = loglog_fit(distance[selected], branch.N[selected])
    norm = modes.norm_2p2(params.p, mode)
    return SmallAmplitudeFit(
        slope=slope,
        prefactor=prefactor,
        r2=r2,
        slope_expected=1.0 / params.p,
        prefactor_expected=(abs(params.sigma) * norm) ** (-1.0 / params.p),
    )

