__version__ = "0.1.0"
__author__ = "nlsbif developers"
__author_email__ = "nlsbif@users.noreply.github.com"
__license__ = "Apache-2.0"
__copyright__ = f"Copyright (c) 2022-2023, {__author__}."
__homepage__ = "https://github.com/nlsbif/nlsbif"
__docs__ = "NLS branch continuation and symmetry-breaking bifurcation toolkit"
__long_doc__ = """
nlsbif traces ground-state branches of the one-dimensional stationary nonlinear Schrödinger equation
with symmetric potentials, detects and classifies the symmetry-breaking pitchfork bifurcation and checks
the large-E soliton concentration laws.
"""

__all__ = [
    "__author__",
    "__author_email__",
    "__copyright__",
    "__docs__",
    "__homepage__",
    "__license__",
    "__version__",
]
