"""Error hierarchy shared by every module.

Each error carries a short ``kind`` tag and the process exit code the CLI
uses when it escapes a subcommand.
"""

from __future__ import annotations


class FlowError(Exception):
    """Base class for all errors raised by this package."""

    kind: str = "error"
    exit_code: int = 2


class ConfigurationError(FlowError, ValueError):
    """Invalid configuration, dimensions or enum values supplied by the caller."""

    kind = "config"
    exit_code = 1


class ShapeError(FlowError, ValueError):
    """Array shapes do not agree with a network, model or parameter vector."""

    kind = "shape"


class DataError(FlowError, ValueError):
    """Unusable input data (too few rows, ragged CSV, mismatched blocks, ...)."""

    kind = "data"


class InfeasibleSearchError(DataError):
    """Exhaustive ordering search requested for too many variables."""


class SerializationError(DataError):
    """Malformed model document, or a model that cannot be written out."""


class StateError(FlowError, RuntimeError):
    """Operation requires a model state that is not available."""

    kind = "state"


class NumericError(FlowError, ArithmeticError):
    """Non-finite value produced while evaluating a flow."""

    kind = "numeric"

    def __init__(
        self,
        message: str,
        *,
        layer: int | None = None,
        variable: int | None = None,
    ) -> None:
        where = []
        if layer is not None:
            where.append(f"layer {layer}")
        if variable is not None:
            where.append(f"variable x{variable + 1}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.layer = layer
        self.variable = variable

    def __reduce__(self):
        # keep the location suffix from being appended twice in worker processes
        return type(self), (self.args[0],), self.__dict__


class TrainingDivergedError(NumericError):
    """Training loss became non-finite despite the scale clamp."""

    def __init__(self, epoch: int, direction: str | None = None) -> None:
        message = f"training diverged at epoch {epoch}"
        if direction:
            message = f"{message} while fitting direction {direction}"
        super().__init__(message)
        self.epoch = epoch
        self.direction = direction

    def __reduce__(self):
        return type(self), (self.epoch, self.direction)
