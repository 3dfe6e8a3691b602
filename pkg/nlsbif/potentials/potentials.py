import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from nlsbif.discretization.grid import Grid
from nlsbif.utilities.exceptions import InvalidParameters, UnsupportedPotential

_logger = logging.getLogger(__name__)

# V_s''(0) changes sign where tanh^2(s) = 1/3
CRITICAL_SEPARATION = float(np.arccosh(np.sqrt(1.5)))


def sech(y: np.ndarray) -> np.ndarray:
    t = np.exp(-np.abs(y))
    return 2.0 * t / (1.0 + t * t)


def _well(y: np.ndarray) -> np.ndarray:
    return -sech(y) ** 2


def _well_first(y: np.ndarray) -> np.ndarray:
    return 2.0 * sech(y) ** 2 * np.tanh(y)


def _well_second(y: np.ndarray) -> np.ndarray:
    return 2.0 * sech(y) ** 2 * (1.0 - 3.0 * np.tanh(y) ** 2)


class PotentialType(Enum):
    FREE = "free"
    SINGLE_WELL = "single_well_sech2"
    DOUBLE_WELL = "double_well_sech2"
    TABULATED = "tabulated"

    def get_potential(self, s: Optional[float] = None, table_path: Optional[str] = None) -> "Potential":
        if self == PotentialType.FREE:
            return FreePotential()
        elif self == PotentialType.SINGLE_WELL:
            return SingleWellSech2()
        elif self == PotentialType.DOUBLE_WELL:
            if s is None:
                raise InvalidParameters("A double well needs the separation s.", key="potential.s")
            return DoubleWellSech2(s)
        elif self == PotentialType.TABULATED:
            if table_path is None:
                raise InvalidParameters("A tabulated potential needs a table path.", key="potential.table_path")
            return TabulatedPotential.from_file(table_path)
        else:
            raise ValueError("Unknown potential type")


class CriticalPoint(NamedTuple):
    x: float
    kind: str
    curvature: float


class Potential(ABC):
    """Even, bounded potential vanishing at infinity."""

    kind: PotentialType

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def first_derivative(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        ...

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(x)

    def on_grid(self, grid: Grid) -> np.ndarray:
        return np.asarray(self.value(grid.nodes), dtype=float)

    def critical_points(self) -> List[CriticalPoint]:
        curvature = float(self.second_derivative(np.array([0.0]))[0])
        return [CriticalPoint(0.0, "maximum" if curvature < 0 else "minimum", curvature)]

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value}

    @property
    def is_free(self) -> bool:
        return False


class FreePotential(Potential):
    kind = PotentialType.FREE

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    first_derivative = value
    second_derivative = value

    def critical_points(self) -> List[CriticalPoint]:
        return []

    @property
    def is_free(self) -> bool:
        return True


class SingleWellSech2(Potential):
    """V0(x) = -sech^2(x)."""

    kind = PotentialType.SINGLE_WELL

    def value(self, x: np.ndarray) -> np.ndarray:
        return _well(np.asarray(x, dtype=float))

    def first_derivative(self, x: np.ndarray) -> np.ndarray:
        return _well_first(np.asarray(x, dtype=float))

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return _well_second(np.asarray(x, dtype=float))


class DoubleWellSech2(Potential):
    """V_s(x) = V0(x + s) + V0(x - s)."""

    kind = PotentialType.DOUBLE_WELL

    def __init__(self, s: float) -> None:
        if s < 0:
            raise InvalidParameters(f"The separation must be nonnegative, got {s}.", key="potential.s")
        self.s = float(s)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _well(x + self.s) + _well(x - self.s)

    def first_derivative(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _well_first(x + self.s) + _well_first(x - self.s)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _well_second(x + self.s) + _well_second(x - self.s)

    def well_minimum(self) -> float:
        """Positive minimiser of V_s, only defined beyond the critical separation."""
        if self.s <= CRITICAL_SEPARATION:
            raise UnsupportedPotential(f"s = {self.s} is a single well; the only critical point is x = 0.")
        return float(brentq(lambda x: float(self.first_derivative(np.array([x]))[0]), 1e-6, self.s + 3.0, xtol=1e-14))

    def critical_points(self) -> List[CriticalPoint]:
        points = super().critical_points()
        if self.s > CRITICAL_SEPARATION:
            x_min = self.well_minimum()
            curvature = float(self.second_derivative(np.array([x_min]))[0])
            points += [CriticalPoint(-x_min, "minimum", curvature), CriticalPoint(x_min, "minimum", curvature)]
        return points

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "s": self.s}


class TabulatedPotential(Potential):
    """Cubic spline through (x, V) samples on a symmetric range; zero outside it."""

    kind = PotentialType.TABULATED

    def __init__(self, x: np.ndarray, values: np.ndarray, boundary_tol: float = 1e-8, path: Optional[str] = None):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or len(x) < 4:
            raise UnsupportedPotential("A tabulated potential needs at least four (x, V) pairs.")
        if np.any(np.diff(x) <= 0):
            raise UnsupportedPotential("Tabulated x values must be strictly increasing.")
        if not np.allclose(x, -x[::-1], atol=1e-12 * max(1.0, np.abs(x).max())):
            raise UnsupportedPotential("Tabulated x values must cover a symmetric range.")
        if not np.allclose(values, values[::-1], atol=1e-10):
            raise UnsupportedPotential("Tabulated potential must be even.")
        if max(abs(values[0]), abs(values[-1])) >= boundary_tol:
            raise UnsupportedPotential(f"Tabulated potential must vanish at the table ends (|V| < {boundary_tol}).")
        half = x >= 0
        self._x_max = float(x[-1])
        self._spline = CubicSpline(x[half], values[half], bc_type=((1, 0.0), "not-a-knot"))
        self.path = path

    @classmethod
    def from_file(cls, path: str) -> "TabulatedPotential":
        try:
            table = np.loadtxt(path, ndmin=2)
        except (OSError, ValueError) as err:
            raise UnsupportedPotential(f"Cannot read potential table {path}: {err}") from err
        if table.shape[1] != 2:
            raise UnsupportedPotential(f"Potential table {path} must have two columns.")
        return cls(table[:, 0], table[:, 1], path=path)

    def _evaluate(self, x: np.ndarray, nu: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.abs(x)
        out = np.where(y <= self._x_max, self._spline(np.minimum(y, self._x_max), nu), 0.0)
        return out * np.sign(x) if nu == 1 else out

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._evaluate(x, 0)

    def first_derivative(self, x: np.ndarray) -> np.ndarray:
        return self._evaluate(x, 1)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return self._evaluate(x, 2)

    @property
    def is_free(self) -> bool:
        return bool(np.all(self._spline.c == 0.0))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "table_path": self.path}


def is_double_well(potential: Potential) -> Tuple[bool, float]:
    """Whether V_s has a local maximum at the origin, together with the critical separation."""
    if not isinstance(potential, DoubleWellSech2):
        raise UnsupportedPotential(f"Expected a double well, got {potential.kind.value}.")
    return potential.s > CRITICAL_SEPARATION, CRITICAL_SEPARATION
