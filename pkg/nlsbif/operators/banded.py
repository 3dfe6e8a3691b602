"""Symmetric banded operators stored in LAPACK lower-band form.

``bands[k, j]`` holds ``A[j + k, j]``; the entries ``bands[k, n - k:]`` are padding and kept at zero.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import splu

from nlsbif.utilities.exceptions import EigenFailure, NonFiniteInput, SolveFailure

_logger = logging.getLogger(__name__)


class Parity(Enum):
    ANY = "any"
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class ParityBasis:
    """Orthonormal basis of the even or odd subspace of R^n (n odd, centre node m).

    Even columns are ``e_m`` and ``(e_{m+j} + e_{m-j}) / sqrt(2)``, odd columns ``(e_{m+j} - e_{m-j}) / sqrt(2)``.
    """

    n: int
    parity: Parity

    @property
    def center(self) -> int:
        return (self.n - 1) // 2

    @property
    def size(self) -> int:
        if self.parity == Parity.EVEN:
            return self.center + 1
        if self.parity == Parity.ODD:
            return self.center
        return self.n

    @cached_property
    def matrix(self) -> sparse.csr_matrix:
        n, m = self.n, self.center
        if self.parity == Parity.ANY:
            return sparse.identity(n, format="csr")
        j = np.arange(1, m + 1)
        c = 1.0 / np.sqrt(2.0)
        if self.parity == Parity.EVEN:
            rows = np.concatenate([[m], m + j, m - j])
            cols = np.concatenate([[0], j, j])
            vals = np.concatenate([[1.0], np.full(m, c), np.full(m, c)])
        else:
            rows = np.concatenate([m + j, m - j])
            cols = np.concatenate([j - 1, j - 1])
            vals = np.concatenate([np.full(m, c), np.full(m, -c)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, self.size))

    def restrict(self, values: np.ndarray) -> np.ndarray:
        if self.parity == Parity.ANY:
            return np.array(values, dtype=float)
        return self.matrix.T @ values

    def extend(self, coords: np.ndarray) -> np.ndarray:
        if self.parity == Parity.ANY:
            return np.array(coords, dtype=float)
        return self.matrix @ coords


class SymmetricBandedOperator:
    def __init__(self, bands: np.ndarray) -> None:
        bands = np.array(bands, dtype=float, ndmin=2)
        n = bands.shape[1]
        for k in range(1, bands.shape[0]):
            bands[k, max(n - k, 0) :] = 0.0
        if not np.all(np.isfinite(bands)):
            raise NonFiniteInput("Operator entries must be finite.")
        bands.setflags(write=False)
        self._bands = bands

    @classmethod
    def from_diagonals(cls, n: int, diagonals: Sequence[Union[float, np.ndarray]]) -> "SymmetricBandedOperator":
        """Build from the main diagonal followed by the sub-diagonals, each a scalar or an array of length n - k."""
        bands = np.zeros((len(diagonals), n))
        for k, diagonal in enumerate(diagonals):
            bands[k, : n - k] = diagonal
        return cls(bands)

    @property
    def bands(self) -> np.ndarray:
        return self._bands

    @property
    def n(self) -> int:
        return self._bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self._bands.shape[0] - 1

    def diagonal(self) -> np.ndarray:
        return self._bands[0]

    def add_diagonal(self, values: Union[float, np.ndarray]) -> "SymmetricBandedOperator":
        bands = self._bands.copy()
        bands[0] += values
        return SymmetricBandedOperator(bands)

    def scaled(self, factor: float) -> "SymmetricBandedOperator":
        return SymmetricBandedOperator(factor * self._bands)

    def __add__(self, other: "SymmetricBandedOperator") -> "SymmetricBandedOperator":
        if other.n != self.n:
            raise ValueError(f"Cannot add operators of size {self.n} and {other.n}.")
        bands = np.zeros((max(self.bandwidth, other.bandwidth) + 1, self.n))
        bands[: self.bandwidth + 1] += self._bands
        bands[: other.bandwidth + 1] += other.bands
        return SymmetricBandedOperator(bands)

    def dot(self, values: np.ndarray) -> np.ndarray:
        n = self.n
        out = self._bands[0] * values
        for k in range(1, self.bandwidth + 1):
            band = self._bands[k, : n - k]
            out[k:] += band * values[: n - k]
            out[: n - k] += band * values[k:]
        return out

    def tocsr(self) -> sparse.csr_matrix:
        n, b = self.n, self.bandwidth
        diagonals = [self._bands[0]]
        offsets = [0]
        for k in range(1, b + 1):
            diagonals += [self._bands[k, : n - k], self._bands[k, : n - k]]
            offsets += [-k, k]
        return sparse.diags(diagonals, offsets, shape=(n, n), format="csr")

    def todense(self) -> np.ndarray:
        return self.tocsr().toarray()

    def _general_band_form(self) -> np.ndarray:
        n, b = self.n, self.bandwidth
        ab = np.zeros((2 * b + 1, n))
        ab[b] = self._bands[0]
        for k in range(1, b + 1):
            ab[b + k, : n - k] = self._bands[k, : n - k]
            ab[b - k, k:] = self._bands[k, : n - k]
        return ab

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = self.bandwidth
        try:
            solution = linalg.solve_banded((b, b), self._general_band_form(), rhs)
        except (linalg.LinAlgError, ValueError) as err:
            raise SolveFailure(f"Banded solve failed: {err}") from err
        if not np.all(np.isfinite(solution)):
            raise SolveFailure("Banded solve produced non-finite values.")
        return solution

    def eigh(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """The ``k`` algebraically smallest eigenpairs, eigenvectors with unit Euclidean norm."""
        k = min(k, self.n)
        try:
            if self.bandwidth == 1:
                return linalg.eigh_tridiagonal(
                    self._bands[0], self._bands[1, : self.n - 1], select="i", select_range=(0, k - 1)
                )
            return linalg.eig_banded(self._bands, lower=True, select="i", select_range=(0, k - 1))
        except (linalg.LinAlgError, ValueError) as err:
            raise EigenFailure(f"Eigen-solve of a size {self.n} banded operator failed: {err}") from err

    def count_eigenvalues(self, lower: float, upper: float) -> int:
        """Number of eigenvalues in the half-open interval ``(lower, upper]``."""
        try:
            if self.bandwidth == 1:
                values = linalg.eigvalsh_tridiagonal(
                    self._bands[0], self._bands[1, : self.n - 1], select="v", select_range=(lower, upper)
                )
            else:
                values = linalg.eig_banded(
                    self._bands, lower=True, eigvals_only=True, select="v", select_range=(lower, upper)
                )
        except (linalg.LinAlgError, ValueError) as err:
            raise EigenFailure(f"Eigenvalue count failed: {err}") from err
        return len(values)

    def spectral_lower_bound(self) -> float:
        """Gershgorin lower bound of the spectrum, minus one."""
        n = self.n
        radius = np.zeros(n)
        for k in range(1, self.bandwidth + 1):
            band = np.abs(self._bands[k, : n - k])
            radius[: n - k] += band
            radius[k:] += band
        return float(np.min(self._bands[0] - radius)) - 1.0

    def count_below(self, threshold: float) -> int:
        return self.count_eigenvalues(self.spectral_lower_bound(), threshold)

    def restrict(self, parity: Parity) -> Tuple["SymmetricBandedOperator", ParityBasis]:
        """Reduced operator ``Q^T A Q`` on the parity subspace; it keeps the bandwidth of A."""
        basis = ParityBasis(self.n, parity)
        if parity == Parity.ANY:
            return self, basis
        q = basis.matrix
        reduced = (q.T @ self.tocsr() @ q).tocsr()
        size = basis.size
        bands = np.zeros((self.bandwidth + 1, size))
        for k in range(min(self.bandwidth, size - 1) + 1):
            bands[k, : size - k] = reduced.diagonal(-k)
        return SymmetricBandedOperator(bands), basis


def bordered_solve(
    operator: SymmetricBandedOperator,
    column: np.ndarray,
    row: np.ndarray,
    rhs: np.ndarray,
    rhs_extra: float = 0.0,
    corner: float = 0.0,
) -> Tuple[np.ndarray, float]:
    """Solve ``[[A, column], [row^T, corner]] [w, mu] = [rhs, rhs_extra]`` with a sparse LU factorization."""
    system = sparse.bmat(
        [
            [operator.tocsr(), sparse.csr_matrix(np.asarray(column, dtype=float).reshape(-1, 1))],
            [sparse.csr_matrix(np.asarray(row, dtype=float).reshape(1, -1)), sparse.csr_matrix([[corner]])],
        ],
        format="csc",
    )
    try:
        solution = splu(system).solve(np.append(rhs, rhs_extra))
    except RuntimeError as err:
        raise SolveFailure(f"Bordered solve failed: {err}") from err
    if not np.all(np.isfinite(solution)):
        raise SolveFailure("Bordered solve produced non-finite values.")
    return solution[:-1], float(solution[-1])


def parity_solve(operator: SymmetricBandedOperator, rhs: np.ndarray, parity: Parity = Parity.ANY) -> np.ndarray:
    reduced, basis = operator.restrict(parity)
    return basis.extend(reduced.solve(basis.restrict(rhs)))
