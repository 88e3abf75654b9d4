"""Exception and warning types.

Every error carries the process exit code the command-line front end
reports for it.
"""

from __future__ import annotations


class FracflowError(Exception):
    exit_code = 1


class ConfigError(FracflowError, ValueError):
    """Invalid configuration; ``problems`` lists every violation found."""

    exit_code = 2

    def __init__(self, message: str, problems: list[str] | None = None) -> None:
        self.problems = list(problems) if problems else [message]
        super().__init__(message if problems is None else "; ".join(self.problems))


class NumericalFailure(FracflowError, ArithmeticError):
    exit_code = 3


class NaNDetected(NumericalFailure):
    pass


class UnstableStep(NumericalFailure):
    pass


class FieldIOError(FracflowError, OSError):
    exit_code = 4


class VerificationFailed(FracflowError):
    exit_code = 5


class NonConvergedQuadrature(NumericalFailure):
    pass


class UnsupportedDimension(FracflowError, ValueError):
    exit_code = 2


class NonPowerOfTwo(FracflowError, ValueError):
    exit_code = 2


class TooFewSamples(FracflowError, ValueError):
    exit_code = 2


class NonFiniteInput(FracflowError, ValueError):
    exit_code = 3


class UnsupportedDescriptor(FracflowError, ValueError):
    exit_code = 2


class SingularSteadyState(FracflowError, ArithmeticError):
    exit_code = 3


class GuardTriggered(RuntimeWarning):
    """Pressure recovery skipped modes whose mollifier symbol underflowed."""


class CFLExceeded(RuntimeWarning):
    """Advective Courant number above 0.5."""
