from typing import Sequence, Tuple

import numpy as np


def _lagrange_weights(nodes: Sequence[float], at: float) -> np.ndarray:
    """Weights of the derivative at ``at`` of the quadratic through three nodes."""
    x0, x1, x2 = nodes
    return np.array(
        [
            ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2)),
            ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2)),
            ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1)),
        ]
    )


def finite_difference(x: Sequence[float], f: np.ndarray) -> np.ndarray:
    """Three-point derivative on a nonuniform grid; one-sided at the ends, exact for quadratics.

    ``f`` may carry trailing dimensions (one row per abscissa).
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(x) < 3:
        raise ValueError(f"At least three points are needed, got {len(x)}.")
    out = np.empty_like(f)
    last = len(x) - 1
    for i in range(len(x)):
        j = min(max(i - 1, 0), last - 2)
        w = _lagrange_weights(x[j : j + 3], x[i])
        out[i] = np.tensordot(w, f[j : j + 3], axes=1)
    return out


def centered_difference(x: Sequence[float], f: Sequence[float], index: int) -> float:
    if not 0 < index < len(x) - 1:
        raise ValueError("A centered difference needs a neighbour on each side.")
    w = _lagrange_weights(x[index - 1 : index + 2], x[index])
    return float(np.dot(w, np.asarray(f[index - 1 : index + 2], dtype=float)))


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares fit of log y = a log x + log b; returns (a, b, r2)."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.abs(np.asarray(y, dtype=float)))
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    total = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum((ly - fitted) ** 2) / total if total > 0 else 1.0
    return float(slope), float(np.exp(intercept)), float(r2)


def sign_changes(x: Sequence[float], f: Sequence[float]) -> np.ndarray:
    """Linearly interpolated abscissae where f changes sign."""
    x, f = np.asarray(x, dtype=float), np.asarray(f, dtype=float)
    idx = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
    return x[idx] - f[idx] * (x[idx + 1] - x[idx]) / (f[idx + 1] - f[idx])
