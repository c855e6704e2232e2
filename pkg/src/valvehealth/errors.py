"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class ShapeError(ValueError):
    """Array dimensions do not line up with the model or operation."""


class CsvFormatError(ValueError):
    """A CSV file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ExtractionError(ValueError):
    """Base class for per-edge feature extraction failures."""


class NoActuationError(ExtractionError):
    """The region of interest never rises above the 10% threshold
    (the valve failed to actuate)."""


class DegenerateTransientError(ExtractionError):
    """The rise is instantaneous; the 10%/90% crossing times coincide."""


class ModelFormatError(ValueError):
    """A model file is malformed; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss; carries the offending epoch."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch
