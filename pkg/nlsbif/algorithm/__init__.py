from nlsbif.algorithm.base import Predictor  # noqa: F401
from nlsbif.algorithm.predictors import ConstantPredictor, get_predictor, SecantPredictor  # noqa: F401
