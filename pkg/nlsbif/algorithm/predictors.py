import logging
from typing import Dict, List, Type

from nlsbif.algorithm.base import Predictor
from nlsbif.discretization.grid import GridFunction
from nlsbif.utilities.exceptions import InvalidParameters

_logger = logging.getLogger(__name__)


class ConstantPredictor(Predictor):
    order = 0

    def predict(self, E_history: List[float], phi_history: List[GridFunction], E_next: float) -> GridFunction:
        return phi_history[-1]


class SecantPredictor(Predictor):
    """Linear extrapolation through the last two accepted states."""

    order = 1

    def predict(self, E_history: List[float], phi_history: List[GridFunction], E_next: float) -> GridFunction:
        if len(phi_history) < 2 or E_history[-1] == E_history[-2]:
            return phi_history[-1]
        t = (E_next - E_history[-1]) / (E_history[-1] - E_history[-2])
        return phi_history[-1] + t * (phi_history[-1] - phi_history[-2])


_PREDICTORS: Dict[int, Type[Predictor]] = {
    0: ConstantPredictor,
    1: SecantPredictor,
}


def get_predictor(order: int) -> Predictor:
    if order not in _PREDICTORS:
        raise InvalidParameters(f"Predictor order must be 0 or 1, got {order}.", key="continuation.predictor_order")
    return _PREDICTORS[order]()
