from abc import ABC, abstractmethod
from typing import Any, Dict, List, TypedDict

import numpy as np

from nlsbif.utilities.exceptions import InvalidParameters


class DistributionDict(TypedDict):
    distribution: str
    params: Dict[str, Any]


class Distribution(ABC):
    """A deterministic set of E values a study sweeps over."""

    @abstractmethod
    def to_dict(self) -> DistributionDict:
        ...

    @abstractmethod
    def values(self) -> np.ndarray:
        ...


class LogUniformGrid(Distribution):
    def __init__(self, low: float, high: float, num: int) -> None:
        if not 0 < low < high or num < 2:
            raise InvalidParameters(f"A log grid needs 0 < low < high and num >= 2, got ({low}, {high}, {num}).")
        self.low = low
        self.high = high
        self.num = num

    def to_dict(self) -> DistributionDict:
        return {"distribution": "log_uniform_grid", "params": {"low": self.low, "high": self.high, "num": self.num}}

    def values(self) -> np.ndarray:
        return np.geomspace(self.low, self.high, self.num)


class LinearGrid(Distribution):
    def __init__(self, low: float, high: float, num: int) -> None:
        if not low < high or num < 2:
            raise InvalidParameters(f"A linear grid needs low < high and num >= 2, got ({low}, {high}, {num}).")
        self.low = low
        self.high = high
        self.num = num

    def to_dict(self) -> DistributionDict:
        return {"distribution": "linear_grid", "params": {"low": self.low, "high": self.high, "num": self.num}}

    def values(self) -> np.ndarray:
        return np.linspace(self.low, self.high, self.num)


class Values(Distribution):
    def __init__(self, choices: List[float]) -> None:
        if not choices:
            raise InvalidParameters("An explicit value list must not be empty.")
        self.choices = [float(c) for c in choices]

    def to_dict(self) -> DistributionDict:
        return {"distribution": "values", "params": {"choices": self.choices}}

    def values(self) -> np.ndarray:
        return np.sort(np.array(self.choices))


_DISTRIBUTIONS = {
    "log_uniform_grid": LogUniformGrid,
    "linear_grid": LinearGrid,
    "values": Values,
}


def from_dict(definition: DistributionDict) -> Distribution:
    name = definition["distribution"]
    if name not in _DISTRIBUTIONS:
        raise InvalidParameters(f"Unknown distribution {name!r}; expected one of {sorted(_DISTRIBUTIONS)}.")
    try:
        return _DISTRIBUTIONS[name](**definition["params"])
    except TypeError as err:
        raise InvalidParameters(f"Bad parameters for {name}: {err}") from err
