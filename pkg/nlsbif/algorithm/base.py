from abc import ABC, abstractmethod
from typing import List

from nlsbif.discretization.grid import GridFunction


class Predictor(ABC):
    """Supplies the Newton seed for the next continuation step from the accepted history."""

    order: int

    @abstractmethod
    def predict(self, E_history: List[float], phi_history: List[GridFunction], E_next: float) -> GridFunction:
        ...
