import numpy as np
import pytest

from nlsbif.discretization.grid import Grid, second_derivative_matrix
from nlsbif.operators.banded import bordered_solve, Parity, ParityBasis, parity_solve, SymmetricBandedOperator
from nlsbif.utilities.exceptions import NonFiniteInput


def _random_operator(n=21, seed=0):
    rng = np.random.default_rng(seed)
    return SymmetricBandedOperator.from_diagonals(n, [4.0 + rng.random(n), rng.random(n - 1), rng.random(n - 2)])


def test_dot_matches_dense():
    op = _random_operator()
    v = np.linspace(-1.0, 1.0, op.n)
    np.testing.assert_allclose(op.dot(v), op.todense() @ v)
    np.testing.assert_allclose(op.todense(), op.todense().T)


def test_solve_matches_dense():
    op = _random_operator()
    rhs = np.arange(op.n, dtype=float)
    np.testing.assert_allclose(op.solve(rhs), np.linalg.solve(op.todense(), rhs), rtol=1e-10)


def test_rejects_non_finite_entries():
    with pytest.raises(NonFiniteInput):
        SymmetricBandedOperator.from_diagonals(5, [np.array([1.0, np.nan, 1.0, 1.0, 1.0])])


def test_dirichlet_laplacian_eigenvalues():
    grid = Grid(half_width=1.0, n=51)
    op = second_derivative_matrix(grid, order=2)
    w, _ = op.eigh(3)
    k = np.arange(1, 4)
    expected = 4.0 / grid.dx**2 * np.sin(k * np.pi / (2 * (grid.n + 1))) ** 2
    np.testing.assert_allclose(w, expected, rtol=1e-9)


def test_count_eigenvalues_agrees_with_dense():
    op = _random_operator(n=31, seed=3)
    w = np.linalg.eigvalsh(op.todense())
    assert op.count_eigenvalues(4.5, 5.5) == int(np.sum((w > 4.5) & (w <= 5.5)))
    assert op.count_below(w[4] + 1e-9) == 5
    assert op.spectral_lower_bound() < w[0]


def test_parity_restriction_splits_the_spectrum():
    grid = Grid(half_width=5.0, n=41)
    op = second_derivative_matrix(grid, order=4).add_diagonal(-2.0 * np.exp(-grid.nodes**2))
    full = np.linalg.eigvalsh(op.todense())[:4]
    even, _ = op.restrict(Parity.EVEN)
    odd, _ = op.restrict(Parity.ODD)
    assert even.bandwidth == op.bandwidth
    merged = np.sort(np.concatenate([even.eigh(2)[0], odd.eigh(2)[0]]))
    np.testing.assert_allclose(merged, full, rtol=1e-10)


def test_parity_basis_keeps_even_vectors():
    basis = ParityBasis(11, Parity.EVEN)
    x = np.linspace(-1.0, 1.0, 11)
    v = np.cos(x)
    assert basis.size == 6
    np.testing.assert_allclose(basis.extend(basis.restrict(v)), v, atol=1e-15)
    odd = ParityBasis(11, Parity.ODD)
    assert np.allclose(odd.restrict(v), 0.0)


def test_parity_solve_returns_an_odd_solution():
    grid = Grid(half_width=5.0, n=41)
    op = second_derivative_matrix(grid).add_diagonal(1.0)
    rhs = np.sin(grid.nodes)
    w = parity_solve(op, rhs, Parity.ODD)
    np.testing.assert_allclose(w, -w[::-1], atol=1e-14)
    np.testing.assert_allclose(op.dot(w), rhs, atol=1e-10)


def test_bordered_solve_matches_dense():
    op = _random_operator(n=9, seed=1)
    column, row = np.ones(9), np.linspace(0.0, 1.0, 9)
    rhs = np.arange(9, dtype=float)
    w, mu = bordered_solve(op, column, row, rhs, rhs_extra=2.0, corner=0.5)
    system = np.block([[op.todense(), column[:, None]], [row[None, :], np.array([[0.5]])]])
    expected = np.linalg.solve(system, np.append(rhs, 2.0))
    np.testing.assert_allclose(np.append(w, mu), expected, rtol=1e-10)
