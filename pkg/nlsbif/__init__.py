"""Root package info."""
import logging
import os

_root_logger = logging.getLogger()
_logger = logging.getLogger(__name__)
_logger.setLevel(logging.INFO)

_console = logging.StreamHandler()
_console.setLevel(logging.DEBUG)

formatter = logging.Formatter("%(levelname)s: %(message)s")
_console.setFormatter(formatter)

# if root logger has handlers, propagate messages up and let root logger process them,
# otherwise use our own handler
if not _root_logger.hasHandlers():
    _logger.addHandler(_console)
    _logger.propagate = False

from nlsbif.__about__ import *  # noqa: E402, F401, F403
from nlsbif.components.bifurcation import analyse_pitchfork, BifurcationReport  # noqa: E402
from nlsbif.components.continuation import Branch, continue_branch, trace_from_linear_mode  # noqa: E402
from nlsbif.components.stationary import newton_solve, NewtonOptions, StationaryState  # noqa: E402
from nlsbif.components.sweep import Sweep  # noqa: E402
from nlsbif.discretization.grid import Grid, GridFunction  # noqa: E402
from nlsbif.operators.schrodinger import ProblemParams  # noqa: E402
from nlsbif.potentials.potentials import PotentialType  # noqa: E402

_PACKAGE_ROOT = os.path.dirname(__file__)
_PROJECT_ROOT = os.path.dirname(_PACKAGE_ROOT)

__all__ = [
    "analyse_pitchfork",
    "BifurcationReport",
    "Branch",
    "continue_branch",
    "Grid",
    "GridFunction",
    "newton_solve",
    "NewtonOptions",
    "PotentialType",
    "ProblemParams",
    "StationaryState",
    "Sweep",
    "trace_from_linear_mode",
]
