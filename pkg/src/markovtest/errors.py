"""Exception hierarchy shared by every layer of the package."""


class MarkovTestError(Exception):
    """Base class for all errors raised by markovtest."""


class ConfigurationError(MarkovTestError, ValueError):
    """Hyper-parameters or sizes are incompatible with the data."""


class InputError(MarkovTestError, ValueError):
    """Malformed or non-finite user data."""


class ContractViolation(MarkovTestError, ValueError):
    """Shapes or dimensions passed between internal components disagree."""


class NumericalError(MarkovTestError, ArithmeticError):
    """A computation produced a non-finite value or failed to factorize."""


class TrainingError(MarkovTestError, RuntimeError):
    """Model fitting diverged even after the automatic retry."""


class SimulationError(MarkovTestError, RuntimeError):
    """A simulated path overflowed."""


class StageError(MarkovTestError, RuntimeError):
    """Wraps an error raised inside one stage of the testing pipeline."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
