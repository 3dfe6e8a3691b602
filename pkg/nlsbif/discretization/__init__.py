from nlsbif.discretization.grid import (  # noqa: F401
    antisymmetric_part,
    Grid,
    GridFunction,
    inner,
    l2_norm,
    quadrature,
    quadrature_weights,
    reflect,
    second_derivative_matrix,
    symmetrize,
)
