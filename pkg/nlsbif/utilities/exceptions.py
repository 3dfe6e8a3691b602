"""Exceptions raised across the package.

``ConfigError`` maps to exit status 2 in the command line, every ``NumericalError`` to exit status 3.
"""
from typing import Any, Optional


class NlsBifError(Exception):
    """Base class of every error raised by nlsbif."""


class ConfigError(NlsBifError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None) -> None:
        self.key = key
        self.line = line
        location = []
        if key:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)


class InvalidParameters(ConfigError, ValueError):
    pass


class InvalidOrder(InvalidParameters):
    pass


class UnsupportedPotential(InvalidParameters):
    pass


class NumericalError(NlsBifError):
    """A computation failed or produced a result that cannot be trusted."""


class NoBoundState(NumericalError):
    pass


class EigenFailure(NumericalError):
    pass


class NonFiniteInput(NumericalError):
    pass


class RhsNotOrthogonal(NumericalError):
    pass


class SolveFailure(NumericalError):
    pass


class MaxIterExceeded(NumericalError):
    pass


class DivergedToZero(NumericalError):
    def __init__(self, message: str, state: Any = None) -> None:
        super().__init__(message)
        self.state = state


class SingularJacobian(NumericalError):
    pass


class WrongSideOfE0(NumericalError):
    pass


class NonpositiveShiftedE(NumericalError):
    pass


class StepUnderflow(NumericalError):
    def __init__(self, message: str, branch: Any = None) -> None:
        super().__init__(message)
        self.branch = branch


class StateCollapsed(NumericalError):
    def __init__(self, message: str, branch: Any = None) -> None:
        super().__init__(message)
        self.branch = branch


class MissingSpectrum(NumericalError):
    pass


class BracketLost(NumericalError):
    pass


class DegenerateLambdaPrime(NumericalError):
    pass


class ZeroQ(NumericalError):
    pass


class FellBackToSymmetric(NumericalError):
    pass


class WindowTooNarrow(NumericalError):
    pass


class UnderResolved(NumericalError):
    pass


class NotCriticalPoint(NumericalError):
    pass


class UnverifiedState(NumericalError):
    pass
