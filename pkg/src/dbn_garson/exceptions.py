"""Exception hierarchy shared by the library and the CLI."""


class DataError(ValueError):
    """Input data is malformed, inconsistent or unusable."""


class ConfigError(ValueError):
    """An experiment configuration or recipe is invalid."""


class NumericalError(ArithmeticError):
    """A numerical routine failed (singular system, divergence, ...)."""


class ConvergenceError(NumericalError):
    def __init__(self, message, gradient_norm=None):
        super().__init__(message)
        self.gradient_norm = gradient_norm


class PerfectSeparationError(NumericalError):
    """A logistic fit found a separating hyperplane; MLE does not exist."""


class StageError(RuntimeError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
