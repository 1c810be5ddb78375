"""
Exception hierarchy shared by every app.

Each error also derives from the closest builtin so callers that only know
``ValueError`` / ``IndexError`` keep working.
"""
from typing import Optional


class PredictorError(Exception):
    """Base class for every error raised by the predictor apps."""


class ArgumentError(PredictorError, ValueError):
    """An operation received arguments that violate its preconditions."""


class InvalidCoordinateError(PredictorError, ValueError):
    pass


class GridIndexError(PredictorError, IndexError):
    pass


class FusionError(PredictorError, ValueError):
    pass


class DegenerateMapError(PredictorError, ValueError):
    """A map carries no probability mass inside the grid."""


class ShapeError(PredictorError, ValueError):
    pass


class NumericError(PredictorError, FloatingPointError):
    """Non-finite or out-of-range values; ``layer`` names where they appeared."""

    def __init__(self, message: str, layer: Optional[str] = None):
        self.layer = layer
        if layer:
            message = f'{message} (layer {layer})'
        super().__init__(message)


class TapeStateError(PredictorError, RuntimeError):
    """A forward tape does not belong to the parameters or target given to backward."""


class CheckpointError(PredictorError):
    """Base class for checkpoint load failures."""


class CheckpointFormatError(CheckpointError, ValueError):
    pass


class CheckpointVersionError(CheckpointError, ValueError):
    pass


class CheckpointShapeError(CheckpointError, ValueError):
    pass


class CheckpointTruncatedError(CheckpointError, EOFError):
    pass


class CheckpointChecksumError(CheckpointError, ValueError):
    pass


class FilterDivergenceError(PredictorError, ArithmeticError):
    """Kalman covariance lost symmetry or positive definiteness."""


class SchemaError(PredictorError, ValueError):
    """A trajectory record failed to parse; carries line number and field."""

    def __init__(self, message: str, line: int, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = f'line {line}' + (f', field {field!r}' if field else '')
        super().__init__(f'{location}: {message}')


class ScenarioConfigError(PredictorError, ValueError):
    pass


class DataError(PredictorError, ValueError):
    """A dataset cannot satisfy a pipeline constraint (e.g. too short for one window)."""
