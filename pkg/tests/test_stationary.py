import numpy as np
import pytest

from nlsbif.components.stationary import (
    classify_symmetry,
    newton_solve,
    NewtonOptions,
    seed_from_linear,
    seed_soliton_at,
    soliton,
    soliton_width,
    Symmetry,
)
from nlsbif.discretization.grid import Grid, GridFunction
from nlsbif.operators.banded import Parity
from nlsbif.operators.schrodinger import ProblemParams
from nlsbif.potentials.linear_modes import solve_linear_modes
from nlsbif.utilities.exceptions import DivergedToZero, NonFiniteInput, NonpositiveShiftedE, WrongSideOfE0


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_newton_recovers_the_free_soliton(free, p):
    grid = Grid.from_spacing(20.0, 0.01)
    params = ProblemParams(sigma=-1.0, p=p)
    exact = soliton(grid.nodes, p, -1.0)
    seed = GridFunction(grid, 1.1 * exact)
    state = newton_solve(seed, 1.0, free, params, NewtonOptions(parity=Parity.EVEN))
    assert np.max(np.abs(state.phi.values - exact)) <= 1e-6
    assert state.symmetry == Symmetry.EVEN
    assert state.residual_history[0] > state.residual_history[-1]
    assert state.relative_stationarity < 1e-8
    assert state.relative_pohozaev < 1e-4


def test_free_soliton_norm(free, params):
    grid = Grid.from_spacing(20.0, 0.01)
    seed = seed_soliton_at(0.0, 1.0, free, params, grid)
    state = newton_solve(seed, 1.0, free, params, NewtonOptions(symmetric_constraint=True))
    assert state.N == pytest.approx(4.0, rel=1e-6)
    assert state.x_cm == pytest.approx(0.0, abs=1e-10)
    assert state.iterations <= 3


def test_small_state_from_the_linear_mode(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    E = modes.E0 + 0.05
    state = newton_solve(seed_from_linear(modes, E, params), E, single_well, params)
    assert 0 < state.N < 0.5
    assert state.symmetry == Symmetry.EVEN
    assert state.phi.values[coarse_grid.center] > 0


def test_seed_on_the_wrong_side_of_E0(coarse_grid, params, single_well):
    modes = solve_linear_modes(single_well, coarse_grid)
    with pytest.raises(WrongSideOfE0):
        seed_from_linear(modes, modes.E0 - 0.1, params)


def test_zero_seed_diverges_to_zero(coarse_grid, params, single_well):
    with pytest.raises(DivergedToZero) as err:
        newton_solve(GridFunction(coarse_grid, np.zeros(coarse_grid.n)), 1.0, single_well, params)
    assert err.value.state.N == 0.0


def test_non_finite_seed(coarse_grid, params, single_well):
    seed = GridFunction(coarse_grid, np.full(coarse_grid.n, np.inf))
    with pytest.raises(NonFiniteInput):
        newton_solve(seed, 1.0, single_well, params)


def test_classify_symmetry(coarse_grid):
    x = coarse_grid.nodes
    assert classify_symmetry(GridFunction(coarse_grid, np.exp(-(x**2)))) == Symmetry.EVEN
    assert classify_symmetry(GridFunction(coarse_grid, x * np.exp(-(x**2)))) == Symmetry.ODD
    assert classify_symmetry(GridFunction(coarse_grid, np.exp(-((x - 1.0) ** 2)))) == Symmetry.NONE


def test_soliton_width(free, params):
    assert soliton_width(0.0, 4.0, free, params) == pytest.approx(0.5)
    with pytest.raises(NonpositiveShiftedE):
        soliton_width(0.0, -1.0, free, params)
