"""Exception hierarchy shared by every stage of the toolkit."""


class HSIError(Exception):
    """Base class for all toolkit errors."""


class DegenerateCubeError(HSIError, ValueError):
    pass


class MissingClassError(HSIError, ValueError):
    pass


class InsufficientSamplesError(HSIError, ValueError):
    pass


class InvalidLabelError(HSIError, ValueError):
    pass


class InvalidDimensionError(HSIError, ValueError):
    pass


class DimensionMismatchError(HSIError, ValueError):
    pass


class NumericalError(HSIError, ArithmeticError):
    pass


class EmptyGraphError(HSIError, ValueError):
    pass


class MissingUnaryError(HSIError, ValueError):
    pass


class EnumerationLimitError(HSIError, ValueError):
    pass


class UnlabeledPredictionError(HSIError, ValueError):
    pass


class EmptyEvaluationError(HSIError, ValueError):
    pass


class GenerationFailureError(HSIError, RuntimeError):
    pass


class FormatError(HSIError, ValueError):
    """A binary or text file does not match its documented layout."""


class ConfigError(HSIError, ValueError):
    pass


class StageError(HSIError):
    """Wraps an error raised inside a pipeline stage, keeping the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
