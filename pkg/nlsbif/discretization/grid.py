import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline

from nlsbif.operators.banded import SymmetricBandedOperator
from nlsbif.utilities.exceptions import InvalidOrder, InvalidParameters

_logger = logging.getLogger(__name__)

# -d^2/dx^2 stencils, main diagonal first, scaled by 1 / dx^2
_STENCILS = {
    2: (2.0, -1.0),
    4: (30.0 / 12.0, -16.0 / 12.0, 1.0 / 12.0),
}


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L] with an odd number of nodes, so that x = 0 is the centre node."""

    half_width: float
    n: int

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise InvalidParameters(f"The half width must be positive, got {self.half_width}.", key="grid.half_width")
        if self.n < 3 or self.n % 2 == 0:
            raise InvalidParameters(f"The node count must be odd and at least 3, got {self.n}.", key="grid.n")

    @classmethod
    def from_spacing(cls, half_width: float, dx: float) -> "Grid":
        """Grid with spacing exactly ``dx``; the half width is rounded up to a multiple of ``dx``."""
        if not dx > 0:
            raise InvalidParameters(f"The spacing must be positive, got {dx}.", key="grid.dx")
        m = int(np.ceil(half_width / dx - 1e-9))
        return cls(half_width=m * dx, n=2 * max(m, 1) + 1)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def center(self) -> int:
        return (self.n - 1) // 2

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.dx * (np.arange(self.n) - self.center)
        x.setflags(write=False)
        return x

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(half_width=self.half_width, n=factor * (self.n - 1) + 1)

    def function(self, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self, f(self.nodes))


def quadrature(grid: Grid, f: Union["GridFunction", np.ndarray]) -> float:
    """Trapezoidal rule, summed in mirror pairs around x = 0 so odd integrands vanish exactly."""
    values = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    m = grid.center
    pairs = values[m + 1 :] + values[:m][::-1]
    pairs[-1] *= 0.5
    return float(grid.dx * (values[m] + pairs.sum()))


def inner(grid: Grid, f: Union["GridFunction", np.ndarray], g: Union["GridFunction", np.ndarray]) -> float:
    f = f.values if isinstance(f, GridFunction) else f
    g = g.values if isinstance(g, GridFunction) else g
    return quadrature(grid, f * g)


def l2_norm(grid: Grid, f: Union["GridFunction", np.ndarray]) -> float:
    return float(np.sqrt(max(inner(grid, f, f), 0.0)))


def quadrature_weights(grid: Grid) -> np.ndarray:
    weights = np.full(grid.n, grid.dx)
    weights[[0, -1]] *= 0.5
    return weights


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(f"Expected {self.grid.n} values, got shape {values.shape}.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n))

    def reflect(self) -> "GridFunction":
        return GridFunction(self.grid, self.values[::-1])

    def symmetrize(self) -> "GridFunction":
        return GridFunction(self.grid, 0.5 * (self.values + self.values[::-1]))

    def antisymmetric_part(self) -> "GridFunction":
        return GridFunction(self.grid, 0.5 * (self.values - self.values[::-1]))

    def norm(self) -> float:
        return l2_norm(self.grid, self.values)

    def inner(self, other: "GridFunction") -> float:
        return inner(self.grid, self.values, other.values)

    def integral(self) -> float:
        return quadrature(self.grid, self.values)

    def normalized(self) -> "GridFunction":
        return self / self.norm()

    def resampled(self, grid: Grid) -> "GridFunction":
        """Cubic interpolation onto another grid, zero outside the current range."""
        spline = CubicSpline(self.grid.nodes, self.values)
        L = self.grid.half_width
        x = grid.nodes
        return GridFunction(grid, np.where(np.abs(x) <= L, spline(np.clip(x, -L, L)), 0.0))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + _values(other))

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - _values(other))

    def __mul__(self, other: Union[float, "GridFunction"]) -> "GridFunction":
        return GridFunction(self.grid, self.values * _values(other))

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "GridFunction":
        return GridFunction(self.grid, self.values / other)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __len__(self) -> int:
        return self.grid.n


def _values(other: Union[float, GridFunction]) -> Union[float, np.ndarray]:
    return other.values if isinstance(other, GridFunction) else other


def reflect(f: GridFunction) -> GridFunction:
    return f.reflect()


def symmetrize(f: GridFunction) -> GridFunction:
    return f.symmetrize()


def antisymmetric_part(f: GridFunction) -> GridFunction:
    return f.antisymmetric_part()


def second_derivative_matrix(grid: Grid, order: int = 4) -> SymmetricBandedOperator:
    """Central-difference -d^2/dx^2 with homogeneous Dirichlet data outside [-L, L]."""
    if order not in _STENCILS:
        raise InvalidOrder(f"Stencil order must be 2 or 4, got {order}.", key="grid.order")
    scale = 1.0 / grid.dx**2
    return SymmetricBandedOperator.from_diagonals(grid.n, [scale * c for c in _STENCILS[order]])
