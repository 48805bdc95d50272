"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates an operation's preconditions."""


class DegenerateInputError(ValueError):
    """Input is structurally valid but numerically unusable (e.g. zero bandwidth)."""


class InvalidConfigError(ValueError):
    """A configuration value is out of range or unknown."""


class TensorFormatError(ValueError):
    """Malformed tensor file. Carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class LinearSolveError(RuntimeError):
    """A linear system could not be solved reliably."""


class PipelineStageError(RuntimeError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
