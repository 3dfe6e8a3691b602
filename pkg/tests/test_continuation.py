from dataclasses import replace
from unittest import mock

import numpy as np
import pytest

from nlsbif.algorithm import get_predictor, Predictor
from nlsbif.algorithm.predictors import ConstantPredictor, SecantPredictor
from nlsbif.components.continuation import (
    branch_derivatives,
    BranchSymmetry,
    continue_branch,
    ContinuationControls,
    fit_small_amplitude_law,
    Stability,
    stability_classify,
    tangent_rate,
    trace_from_linear_mode,
)
from nlsbif.components.stationary import newton_solve, NewtonOptions, seed_from_linear
from nlsbif.operators.banded import Parity
from nlsbif.potentials.linear_modes import solve_linear_modes
from nlsbif.utilities.exceptions import (
    DivergedToZero,
    InvalidParameters,
    MaxIterExceeded,
    MissingSpectrum,
    StateCollapsed,
    StepUnderflow,
)
from tests.conftest import synthetic_branch, synthetic_point


@pytest.fixture
def ground_branch(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    branch = trace_from_linear_mode(modes, modes.E0 + 0.5, single_well, params)
    return modes, branch


def test_predictors(coarse_grid):
    f = coarse_grid.function(lambda x: np.exp(-(x**2)))
    g = 2.0 * f
    assert isinstance(get_predictor(0), ConstantPredictor)
    assert get_predictor(0).predict([1.0, 2.0], [f, g], 3.0) is g
    secant = get_predictor(1)
    assert isinstance(secant, SecantPredictor)
    np.testing.assert_allclose(secant.predict([1.0, 2.0], [f, g], 3.0).values, 3.0 * f.values)
    np.testing.assert_allclose(secant.predict([1.0], [f], 3.0).values, f.values)
    with pytest.raises(InvalidParameters):
        get_predictor(2)


def test_predictor_needs_only_predict(coarse_grid):
    class Halving(Predictor):
        order = 0

        def predict(self, E_history, phi_history, E_next):
            return 0.5 * phi_history[-1]

    f = coarse_grid.function(lambda x: np.exp(-(x**2)))
    np.testing.assert_allclose(Halving().predict([1.0], [f], 2.0).values, 0.5 * f.values)
    with pytest.raises(TypeError):
        Predictor()


@pytest.mark.parametrize("kwargs", [{"dE_min": 0.0}, {"dE_min": 1.0, "dE_max": 0.5}, {"growth": 0.9}])
def test_controls_validation(kwargs):
    with pytest.raises(InvalidParameters):
        ContinuationControls(**kwargs)


def test_ground_branch_of_the_single_well(ground_branch):
    modes, branch = ground_branch
    assert branch.symmetry == BranchSymmetry.EVEN
    assert branch.E[-1] == pytest.approx(modes.E0 + 0.5)
    assert np.all(np.diff(branch.E) > 0)
    assert np.all(np.diff(branch.N) > 0)
    assert all(point.n_negative == 1 for point in branch.points)
    assert np.all(branch.lambda1 > 0)

    with_slopes = branch_derivatives(branch)
    verdicts = {stability_classify(point).stability for point in with_slopes.points}
    assert verdicts == {Stability.STABLE}
    frame = with_slopes.to_frame()
    assert list(frame.columns[:3]) == ["E", "N", "norm_2p2"]
    assert set(frame["stability"]) == {"stable"}
    assert len(frame) == len(branch)


def test_derivative_cross_checks(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    controls = ContinuationControls(dE_max=0.01)
    branch = branch_derivatives(trace_from_linear_mode(modes, modes.E0 + 0.3, single_well, params, controls))
    interior = [point for point in branch.points[1:-2] if point.E - modes.E0 >= 0.1]
    assert len(interior) >= 10
    for point in interior:
        assert point.dN_dE == pytest.approx(point.dN_dE_linear, rel=1e-3)
        assert point.dnorm_residual <= 1e-3
        assert point.energy_identity_residual <= 1e-3


def test_small_amplitude_law(ground_branch, params):
    modes, branch = ground_branch
    fit = fit_small_amplitude_law(branch, modes, window=(1e-3, 3e-2))
    assert fit.slope == pytest.approx(fit.slope_expected, abs=0.1)
    assert fit.prefactor == pytest.approx(fit.prefactor_expected, rel=0.2)


def test_step_underflow_keeps_the_partial_branch(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    E = modes.E0 + 0.01
    options = NewtonOptions(symmetric_constraint=True)
    start = newton_solve(seed_from_linear(modes, E, params), E, single_well, params, options)
    controls = ContinuationControls(dE_initial=1e-2, dE_min=1e-3)
    with mock.patch("nlsbif.components.continuation.newton_solve", side_effect=MaxIterExceeded("stuck")):
        with pytest.raises(StepUnderflow) as err:
            continue_branch(start, E + 1.0, single_well, params, controls=controls)
    assert len(err.value.branch) == 1
    assert err.value.branch.points[0].E == E


def test_branch_jump_is_rejected(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    E = modes.E0 + 0.05
    start = newton_solve(seed_from_linear(modes, E, params), E, single_well, params, NewtonOptions(parity=Parity.EVEN))
    calls = []

    def _jump_once(seed, E_next, potential, params, options):
        state = newton_solve(seed, E_next, potential, params, options)
        calls.append(E_next)
        return replace(state, phi=10.0 * state.phi) if len(calls) == 1 else state

    with mock.patch("nlsbif.components.continuation.newton_solve", side_effect=_jump_once):
        branch = continue_branch(start, E + 0.05, single_well, params, controls=ContinuationControls(dE_initial=1e-2))
    assert len(calls) >= len(branch)
    moves = [(b.state.phi - a.state.phi).norm() / (b.E - a.E) for a, b in zip(branch.points, branch.points[1:])]
    rate = tangent_rate(start, single_well, params, Parity.EVEN)
    assert max(moves) < 2.0 * rate
    assert np.all(np.diff(branch.N) > 0)


def test_state_collapse_keeps_the_partial_branch(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    E = modes.E0 + 0.05
    start = newton_solve(seed_from_linear(modes, E, params), E, single_well, params)
    with mock.patch("nlsbif.components.continuation.newton_solve", side_effect=DivergedToZero("collapsed")):
        with pytest.raises(StateCollapsed) as err:
            continue_branch(start, modes.E0 + 0.01, single_well, params)
    assert len(err.value.branch) == 1


def test_continuity_factor_must_exceed_one():
    with pytest.raises(InvalidParameters):
        ContinuationControls(continuity_factor=1.0)


def test_continuation_target_must_move(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    E = modes.E0 + 0.01
    start = newton_solve(seed_from_linear(modes, E, params), E, single_well, params)
    with pytest.raises(InvalidParameters):
        continue_branch(start, E, single_well, params)


def test_stability_classify(coarse_grid):
    def verdict(n_negative, dN_dE=None):
        point = replace(synthetic_point(1.0, (-1.0, 0.5), coarse_grid, n_negative=n_negative), dN_dE=dN_dE)
        return stability_classify(point).stability

    assert verdict(2) == Stability.UNSTABLE
    assert verdict(0) == Stability.STABLE
    assert verdict(1, 0.5) == Stability.STABLE
    assert verdict(1, -0.5) == Stability.UNSTABLE
    assert verdict(1, 1e-12) == Stability.INDETERMINATE
    with pytest.raises(MissingSpectrum):
        verdict(1)


def test_reflected_branch_mirrors_the_centre_of_mass(coarse_grid):
    branch = synthetic_branch([1.0, 2.0, 3.0], [0.3, 0.2, 0.1], coarse_grid)
    shifted = replace(branch, points=[synthetic_point(1.0, (-1.0, 0.3), coarse_grid, x_cm=1.5)])
    mirror = shifted.reflected()
    assert mirror.label == "synthetic_mirror"
    assert mirror.x_cm[0] == pytest.approx(-1.5)
    assert mirror.points[0].state.phi.values[coarse_grid.center + 30] == pytest.approx(
        shifted.points[0].state.phi.values[coarse_grid.center - 30]
    )
