import numpy as np
import pytest

from nlsbif.components.asymptotics import (
    fit_scaling,
    localized_branch_check,
    nonexistence_probe,
    profile_distance,
    ProbeOutcome,
    resolved_grid,
    scaling_frame,
    scaling_sweep,
    ScalingQuantity,
    soliton_norms,
)
from nlsbif.components.stationary import newton_solve, NewtonOptions, seed_soliton_at
from nlsbif.discretization.grid import Grid
from nlsbif.operators.schrodinger import ProblemParams
from nlsbif.potentials.potentials import DoubleWellSech2, FreePotential
from nlsbif.utilities.exceptions import InvalidParameters, NotCriticalPoint, WindowTooNarrow


@pytest.fixture(scope="module")
def free_scaling_branch():
    E_values = [10.0, 30.0, 100.0, 300.0, 1000.0]
    return scaling_sweep(E_values, FreePotential(), ProblemParams(), Grid.from_spacing(10.0, 0.05))


def test_soliton_norms():
    norms = soliton_norms(1.0, -1.0)
    assert norms.mass == pytest.approx(4.0, rel=1e-8)
    assert norms.gradient == pytest.approx(4.0 / 3.0, rel=1e-8)
    assert norms.second_moment == pytest.approx(np.pi**2 / 3.0, rel=1e-6)


def test_resolved_grid_refines_until_the_width_is_resolved():
    grid = resolved_grid(Grid.from_spacing(10.0, 0.1), R=0.2, min_resolution=8.0)
    assert grid.dx == pytest.approx(0.025)
    assert resolved_grid(grid, R=1.0) is grid


@pytest.mark.parametrize("E", [4.0, 25.0])
def test_free_states_are_rescaled_solitons(free, params, E):
    grid = Grid.from_spacing(20.0, 0.01)
    seed = seed_soliton_at(0.0, E, free, params, grid)
    state = newton_solve(seed, E, free, params, NewtonOptions(symmetric_constraint=True))
    assert profile_distance(state, 0.0, free, params) < 1e-3


def test_free_scaling_laws(free_scaling_branch):
    summary = fit_scaling(free_scaling_branch, window=(10.0, 1000.0))
    for quantity in ScalingQuantity:
        fit = summary.fit(quantity)
        assert fit.exponent_fitted == pytest.approx(fit.exponent_expected, abs=5e-3)
        assert fit.r2 > 0.999
    assert summary.ratio_N_residual < 1e-3
    assert summary.ratio_grad_residual < 1e-3
    assert summary.dropped == []
    assert max(summary.profile_distances) < 1e-2
    assert len(summary.to_frame()) == 3


def test_scaling_frame_records_each_state(free_scaling_branch):
    frame = scaling_frame(free_scaling_branch)
    assert list(frame["E"]) == [10.0, 30.0, 100.0, 300.0, 1000.0]
    assert np.all(frame["R"] / frame["dx"] >= 8.0)


def test_scaling_window_must_span_a_decade(free_scaling_branch):
    with pytest.raises(WindowTooNarrow):
        fit_scaling(free_scaling_branch, window=(10.0, 50.0))


def test_probe_on_the_free_potential_is_neutral(free, params):
    result = nonexistence_probe(0.0, free, params, 25.0, Grid.from_spacing(10.0, 0.05))
    assert result.outcome == ProbeOutcome.NEUTRAL
    assert result.R == pytest.approx(0.2)


def test_localized_check_needs_a_critical_point(params):
    grid = Grid.from_spacing(10.0, 0.05)
    with pytest.raises(NotCriticalPoint):
        localized_branch_check(1.0, DoubleWellSech2(2.0), params, [50.0, 100.0, 200.0], grid)
    with pytest.raises(InvalidParameters):
        localized_branch_check(0.0, DoubleWellSech2(2.0), params, [50.0, 100.0], grid)


@pytest.mark.slow
@pytest.mark.parametrize("index, n_negative", [(0, 2), (1, 1)])
def test_localized_branches_at_critical_points(params, index, n_negative):
    potential = DoubleWellSech2(2.0)
    point = potential.critical_points()[index]
    report = localized_branch_check(point.x, potential, params, [50.0, 100.0, 200.0], Grid.from_spacing(10.0, 0.05))
    assert report.kind == point.kind
    assert report.slope_sign_matches
    assert set(report.rows["n_negative"]) == {n_negative}
    if n_negative == 2:
        assert set(report.rows["stability"]) == {"unstable"}


@pytest.mark.slow
@pytest.mark.parametrize("p, stability", [(1.0, "stable"), (2.0, "stable"), (3.0, "unstable")])
def test_power_decides_stability_at_a_well_minimum(p, stability):
    potential = DoubleWellSech2(2.0)
    minimum = potential.critical_points()[2]
    params = ProblemParams(sigma=-1.0, p=p)
    report = localized_branch_check(minimum.x, potential, params, [100.0, 200.0, 400.0], Grid.from_spacing(10.0, 0.05))
    assert report.kind == "minimum"
    assert report.lambda_relative_error < 0.2
    assert set(report.rows["n_negative"]) == {1}
    assert set(report.rows["stability"]) == {stability}
    assert report.to_record()["stability"] == [stability]
