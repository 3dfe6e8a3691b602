import numpy as np
import pytest

from nlsbif.discretization.grid import Grid, GridFunction, l2_norm, quadrature, second_derivative_matrix
from nlsbif.utilities.exceptions import InvalidOrder, InvalidParameters


def test_grid_from_spacing_centres_the_origin():
    grid = Grid.from_spacing(25.0, 0.0125)
    assert grid.n == 4001
    assert grid.dx == pytest.approx(0.0125)
    assert grid.nodes[grid.center] == 0.0
    assert grid.nodes[-1] == pytest.approx(25.0)


@pytest.mark.parametrize("half_width, n", [(10.0, 100), (10.0, 1), (-1.0, 11)])
def test_grid_rejects_bad_sizes(half_width, n):
    with pytest.raises(InvalidParameters):
        Grid(half_width=half_width, n=n)


def test_grid_rejects_nonpositive_spacing():
    with pytest.raises(InvalidParameters) as err:
        Grid.from_spacing(10.0, 0.0)
    assert err.value.key == "grid.dx"


def test_refined_grid_halves_the_spacing():
    grid = Grid.from_spacing(10.0, 0.1)
    fine = grid.refined(2)
    assert fine.dx == pytest.approx(0.05)
    np.testing.assert_allclose(fine.nodes[::2], grid.nodes)


def test_quadrature_of_gaussian(coarse_grid):
    assert quadrature(coarse_grid, np.exp(-coarse_grid.nodes**2)) == pytest.approx(np.sqrt(np.pi), rel=1e-10)


def test_quadrature_of_odd_function_vanishes_exactly(coarse_grid):
    x = coarse_grid.nodes
    assert quadrature(coarse_grid, x**3 * np.exp(-(x**2)) + np.sin(x)) == 0.0


@pytest.mark.parametrize("order, tol", [(2, 5e-3), (4, 2e-5)])
def test_second_derivative_stencils(coarse_grid, order, tol):
    x = coarse_grid.nodes
    f = np.exp(-(x**2))
    exact = (2.0 - 4.0 * x**2) * f
    approx = second_derivative_matrix(coarse_grid, order).dot(f)
    interior = np.abs(x) < 10.0
    assert np.max(np.abs(approx - exact)[interior]) < tol


def test_second_derivative_rejects_order():
    with pytest.raises(InvalidOrder):
        second_derivative_matrix(Grid.from_spacing(1.0, 0.1), 3)


def test_grid_function_parity_parts(coarse_grid):
    x = coarse_grid.nodes
    f = GridFunction(coarse_grid, np.exp(-((x - 1.0) ** 2)))
    np.testing.assert_allclose(f.reflect().values, np.exp(-((x + 1.0) ** 2)))
    recombined = f.symmetrize() + f.antisymmetric_part()
    np.testing.assert_allclose(recombined.values, f.values)
    assert f.symmetrize().inner(f.antisymmetric_part()) == pytest.approx(0.0, abs=1e-14)


def test_grid_function_norm_matches_l2_norm(coarse_grid):
    f = coarse_grid.function(lambda x: np.exp(-(x**2)))
    assert f.norm() == pytest.approx(l2_norm(coarse_grid, f.values))
    assert f.normalized().norm() == pytest.approx(1.0)


def test_resampled_onto_finer_grid(coarse_grid):
    f = coarse_grid.function(lambda x: np.exp(-(x**2)))
    fine = Grid.from_spacing(20.0, 0.01)
    g = f.resampled(fine)
    inside = np.abs(fine.nodes) <= coarse_grid.half_width
    np.testing.assert_allclose(g.values[inside], np.exp(-fine.nodes[inside] ** 2), atol=1e-5)
    assert np.all(g.values[~inside] == 0.0)


def test_grid_function_rejects_wrong_length(coarse_grid):
    with pytest.raises(ValueError):
        GridFunction(coarse_grid, np.zeros(coarse_grid.n + 1))
