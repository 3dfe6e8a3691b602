"""SVG diagrams of branches, reports and studies.

Figures are built on ``matplotlib.figure.Figure`` without pyplot so that stages running on worker threads do not
share global state. The hash salt is pinned and the date stripped, so the SVG text only depends on the data.
"""
import logging
import threading
from typing import Dict, Iterable, Optional, Sequence

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from nlsbif.components.continuation import Branch
from nlsbif.discretization.grid import GridFunction

_logger = logging.getLogger(__name__)

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "nlsbif"
matplotlib.rcParams["svg.fonttype"] = "none"

_lock = threading.Lock()


def _figure(xlabel: str, ylabel: str, title: str = "") -> Figure:
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    return fig


def save_svg(fig: Figure, path: str) -> str:
    ax = fig.axes[0]
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    with _lock:
        fig.savefig(path, format="svg", metadata={"Date": None})
    _logger.info(f"Wrote {path}")
    return path


def plot_norm(branches: Iterable[Branch], path: str, title: str = "") -> str:
    """N(E) of each branch."""
    fig = _figure("E", "N", title)
    ax = fig.axes[0]
    for branch in branches:
        ax.plot(branch.E, branch.N, label=branch.label)
    return save_svg(fig, path)


def plot_lambda(branches: Iterable[Branch], path: str, title: str = "", both: bool = False) -> str:
    """Second L+ eigenvalue along each branch, with the lowest one when ``both`` is set."""
    fig = _figure("E", "L+ eigenvalue", title)
    ax = fig.axes[0]
    ax.axhline(0.0, color="black", linewidth=0.5)
    for branch in branches:
        ax.plot(branch.E, branch.lambda1, label=f"{branch.label} lambda1")
        if both:
            ax.plot(branch.E, branch.lambda0, linestyle=":", label=f"{branch.label} lambda0")
    return save_svg(fig, path)


def plot_pitchfork(branches: Iterable[Branch], path: str, E_star: Optional[float] = None, title: str = "") -> str:
    """Centre of mass against E: the symmetric branch on the axis and the fork leaving it at E*."""
    fig = _figure("E", "x_cm", title)
    ax = fig.axes[0]
    for branch in branches:
        ax.plot(branch.E, branch.x_cm, label=branch.label)
    if E_star is not None and np.isfinite(E_star):
        ax.axvline(E_star, color="grey", linestyle="--", linewidth=0.8, label=f"E*={E_star:.4g}")
    return save_svg(fig, path)


def plot_profiles(profiles: Dict[str, GridFunction], path: str, title: str = "") -> str:
    fig = _figure("x", "phi", title)
    ax = fig.axes[0]
    for label, phi in profiles.items():
        ax.plot(phi.grid.nodes, phi.values, label=label)
    return save_svg(fig, path)


def plot_scaling(frame: pd.DataFrame, quantities: Sequence[str], path: str, title: str = "") -> str:
    """Log-log view of the large-E norms."""
    fig = _figure("E", "norm", title)
    ax = fig.axes[0]
    ax.set_xscale("log")
    ax.set_yscale("log")
    for quantity in quantities:
        ax.plot(frame["E"], frame[quantity], marker="o", markersize=3, label=quantity)
    return save_svg(fig, path)


def plot_audit(coarse: Branch, fine: Branch, path: str, title: str = "") -> str:
    """Second L+ eigenvalue at two resolutions."""
    fig = _figure("E", "lambda1", title)
    ax = fig.axes[0]
    ax.axhline(0.0, color="black", linewidth=0.5)
    ax.plot(coarse.E, coarse.lambda1, "r--", label=f"dx={coarse.grid.dx:.4g}")
    ax.plot(fine.E, fine.lambda1, "b-", label=f"dx={fine.grid.dx:.4g}")
    return save_svg(fig, path)


def plot_linearization(frame: pd.DataFrame, path: str, title: str = "") -> str:
    """Largest squared growth rate of the linearization along each branch; positive values are unstable."""
    fig = _figure("E", "squared growth rate", title)
    ax = fig.axes[0]
    ax.axhline(0.0, color="black", linewidth=0.5)
    for label, rows in frame.groupby("branch", sort=True):
        ax.plot(rows["E"], rows["squared_rate"], marker=".", label=str(label))
    return save_svg(fig, path)
