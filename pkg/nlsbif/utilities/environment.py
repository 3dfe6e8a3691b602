"""System and package details recorded in every run manifest."""
import platform
from typing import Any, Dict

import matplotlib
import numpy
import pandas
import pydantic
import scipy
import sqlmodel
import yaml

from nlsbif.__about__ import __version__


def info_system() -> Dict[str, Any]:
    return {
        "OS": platform.system(),
        "architecture": platform.architecture()[0],
        "processor": platform.processor(),
        "python": platform.python_version(),
    }


def info_packages() -> Dict[str, str]:
    return {
        "nlsbif": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "pandas": pandas.__version__,
        "pydantic": pydantic.VERSION,
        "pyyaml": yaml.__version__,
        "sqlmodel": sqlmodel.__version__,
        "matplotlib": matplotlib.__version__,
    }


def environment_details() -> Dict[str, Any]:
    return {"System": info_system(), "Packages": info_packages()}
