"""
Exception hierarchy for the transiogram toolkit.
The CLI maps InputError to exit status 2 and InfeasibleError to exit status 3.
"""

from typing import Optional


class TransiogramError(Exception):
    """Base class for every error raised by the toolkit."""


class InputError(TransiogramError, ValueError):
    """Malformed or out-of-range user input."""


class GridFormatError(InputError):
    """Raised when a grid file cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ClassOutOfRangeError(InputError):
    """A class label outside 1..K."""

    def __init__(self, label: int, nclasses: int, line: Optional[int] = None):
        self.label = label
        self.nclasses = nclasses
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}label out of range: {label} not in 1..{nclasses}")


class ConfigError(InputError):
    """Invalid model or settings configuration."""


class CurveFormatError(InputError):
    """A curve CSV that does not follow the schema or violates unit-sum."""


class EvaluationError(TransiogramError):
    """A quantity cannot be evaluated for the given data."""


class UndefinedSampleError(EvaluationError):
    """A transiogram sample with npairs = 0 was required."""


class NotEvaluableError(EvaluationError):
    """Every kernel weight is zero at the requested lag."""


class NonPhysicalRateError(EvaluationError, ValueError):
    """A positive transition rate (auto-transiogram increasing at the origin)."""


class FractalBoundaryError(EvaluationError):
    """The transition rate does not settle as lags shrink."""

    def __init__(self, exponent: float, threshold: float):
        self.exponent = exponent
        self.threshold = threshold
        super().__init__(
            f"boundary looks fractal: log-log exponent {exponent:.3f} < {threshold:.3f}, "
            f"no finite perimeter-to-area ratio"
        )


class InfeasibleError(TransiogramError):
    """Numerical infeasibility (exit status 3)."""


class EmbeddingError(InfeasibleError):
    """No positive semidefinite circulant embedding was found."""


class InversionInfeasibleError(InfeasibleError, ValueError):
    """Target indicator variogram outside the range attainable by a Gaussian correlogram."""

    def __init__(self, target: float, upper: float):
        self.target = target
        self.upper = upper
        super().__init__(f"indicator variogram {target!r} outside attainable range [0, {upper!r}]")
