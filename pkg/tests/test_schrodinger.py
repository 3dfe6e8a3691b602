import numpy as np
import pytest

from nlsbif.discretization.grid import Grid, GridFunction
from nlsbif.operators.banded import Parity
from nlsbif.operators.schrodinger import (
    assemble_Lminus,
    assemble_Lplus,
    fix_sign,
    lowest_eigenpairs,
    Normalization,
    OperatorTag,
    ProblemParams,
    residual,
    solve_on_complement,
)
from nlsbif.potentials.potentials import FreePotential
from nlsbif.utilities.exceptions import InvalidParameters, NonFiniteInput, RhsNotOrthogonal


@pytest.fixture
def soliton_state():
    """sqrt(2) sech(x) solves -u'' - u^3 + u = 0."""
    grid = Grid.from_spacing(20.0, 0.02)
    return GridFunction(grid, np.sqrt(2.0) / np.cosh(grid.nodes))


def test_normalization_conversions():
    params = ProblemParams(sigma=-1.0, p=2.0, normalization=Normalization.SECTION5)
    assert params.kinetic_factor == 0.5
    assert params.section1_sigma == -2.0
    assert params.to_section1_E(0.3) == pytest.approx(0.6)
    assert params.from_section1_E(params.to_section1_E(0.3)) == pytest.approx(0.3)
    assert ProblemParams(normalization="section1").kinetic_factor == 1.0


@pytest.mark.parametrize("kwargs, key", [({"sigma": 0.0}, "problem.sigma"), ({"p": 0.0}, "problem.p")])
def test_problem_params_validation(kwargs, key):
    with pytest.raises(InvalidParameters) as err:
        ProblemParams(**kwargs)
    assert err.value.key == key


def test_exact_soliton_residual_is_small(soliton_state, params):
    F = residual(soliton_state, 1.0, FreePotential(), params)
    assert F.norm() < 1e-5


def test_section5_residual_uses_half_kinetic_term(soliton_state):
    """With c = 1/2 the same profile solves the equation at E/2 with sigma/2."""
    params = ProblemParams(sigma=-0.5, p=1.0, normalization=Normalization.SECTION5)
    assert residual(soliton_state, 0.5, FreePotential(), params).norm() < 1e-5


def test_residual_rejects_non_finite(soliton_state, params):
    with pytest.raises(NonFiniteInput):
        residual(soliton_state.values * np.nan, 1.0, FreePotential(), params, grid=soliton_state.grid)


def test_soliton_linearization_kernels(soliton_state, params):
    V = FreePotential()
    lplus = assemble_Lplus(soliton_state, 1.0, V, params)
    spectrum = lowest_eigenpairs(lplus, soliton_state.grid, k=2, continuum_edge=1.0)
    assert int(np.sum(spectrum.eigenvalues < -0.5)) == 1
    assert spectrum.eigenvalues[0] == pytest.approx(-3.0, abs=1e-3)
    assert abs(spectrum.eigenvalues[1]) < 1e-4
    assert spectrum.discrete == [True, True]
    translation = spectrum.eigenfunctions[1]
    np.testing.assert_allclose(translation.values, -translation.values[::-1], atol=1e-6)

    lminus = assemble_Lminus(soliton_state, 1.0, V, params)
    phase = lowest_eigenpairs(lminus, soliton_state.grid, k=1, operator_tag=OperatorTag.LMINUS)
    assert abs(phase.lowest) < 1e-4
    assert abs(phase.eigenfunctions[0].inner(soliton_state.normalized())) == pytest.approx(1.0, abs=1e-6)


def test_even_restriction_drops_the_translation_mode(soliton_state, params):
    lplus = assemble_Lplus(soliton_state, 1.0, FreePotential(), params)
    even = lowest_eigenpairs(lplus, soliton_state.grid, k=2, parity=Parity.EVEN)
    assert even.eigenvalues[1] > 0.5


def test_fix_sign_makes_the_peak_positive():
    values = np.array([0.0, -1.0, -3.0, -1.0, 0.0])
    assert fix_sign(values)[2] == 3.0


def test_solve_on_complement(soliton_state, params):
    lminus = assemble_Lminus(soliton_state, 1.0, FreePotential(), params)
    with pytest.raises(RhsNotOrthogonal):
        solve_on_complement(lminus, soliton_state, kernel_vec=soliton_state)
    x = soliton_state.grid.nodes
    rhs = GridFunction(soliton_state.grid, x * soliton_state.values)
    w = solve_on_complement(lminus, rhs, kernel_vec=soliton_state)
    assert w.inner(soliton_state) == pytest.approx(0.0, abs=1e-10)
    assert GridFunction(w.grid, lminus.dot(w.values) - rhs.values).norm() < 1e-6 * rhs.norm()


@pytest.mark.parametrize("assemble", [assemble_Lplus, assemble_Lminus])
def test_bare_arrays_need_a_grid(soliton_state, assemble):
    params = ProblemParams(sigma=-1.0, p=1.0)
    values = soliton_state.values
    with pytest.raises(InvalidParameters):
        assemble(values, 1.0, FreePotential(), params)
    bare = assemble(values, 1.0, FreePotential(), params, grid=soliton_state.grid)
    wrapped = assemble(soliton_state, 1.0, FreePotential(), params)
    np.testing.assert_allclose(bare.tocsr().toarray(), wrapped.tocsr().toarray())
    with pytest.raises(InvalidParameters):
        residual(values, 1.0, FreePotential(), params)
