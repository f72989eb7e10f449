"""Exception types raised by the toolkit.

Plain argument problems raise :class:`ValueError`; the classes below mark
failures a caller may want to handle separately.
"""


class GSAError(Exception):
    """Base class for toolkit-specific failures."""


class CapacityError(GSAError, ValueError):
    """Requested dimension exceeds the bundled direction-number table."""


class DegenerateModelError(GSAError, ArithmeticError):
    """Model output has zero variance, so indices are undefined."""


class EvaluationError(GSAError, RuntimeError):
    """An external model failed on a batch of runs."""

    def __init__(self, message: str, first_run: int = 0, last_run: int = 0):
        super().__init__(f"{message} (runs {first_run}..{last_run})")
        self.first_run = first_run
        self.last_run = last_run


class ModelOutputParseError(GSAError, ValueError):
    """External model output could not be read as one number per run."""
