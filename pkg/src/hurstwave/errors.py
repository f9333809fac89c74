"""Exception hierarchy shared by all hurstwave modules."""


class HurstError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HurstError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(HurstError, ValueError):
    """Array lengths or block sizes are inconsistent."""


class InsufficientDataError(HurstError, ValueError):
    """Too few levels, pairs or samples to compute the requested quantity."""


class NoDataError(HurstError, ValueError):
    """Aggregation was asked to combine an empty candidate set."""


class ModelFormatError(HurstError, ValueError):
    """A model file could not be parsed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class IncompatibleModelError(ModelFormatError):
    """A model file was written by an unsupported format version."""


class TrainingDivergedError(HurstError, RuntimeError):
    def __init__(self, epoch, batch):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class SearchFailedError(HurstError, RuntimeError):
    def __init__(self, diagnostics):
        lines = "\n".join(f"  trial {i}: {msg}" for i, msg in diagnostics)
        super().__init__(f"every hyperparameter trial diverged:\n{lines}")
        self.diagnostics = diagnostics


class ConfigError(HurstError, ValueError):
    """An experiment configuration is invalid."""
