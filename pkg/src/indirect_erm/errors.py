"""Exception hierarchy shared across the package."""


class IndirectErmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(IndirectErmError):
    """Invalid user-supplied configuration (unknown kinds, bad parameter ranges)."""


class IllPosednessError(IndirectErmError):
    """The noise characteristic function vanishes where the kernel symbol is active."""


class ModelError(IndirectErmError):
    """A probabilistic model object is invalid (negative density, bad priors, ...)."""


class DataError(IndirectErmError):
    """A data-dependent precondition failed (empty sample, missing label, ...)."""


class SimulationError(IndirectErmError):
    """A Monte-Carlo experiment aborted; carries partial results when available.

    Attributes
    ----------
    partial_rows : list
        ``(n, mean, se, count)`` rows completed before the failure.
    """

    def __init__(self, message, partial_rows=None):
        super().__init__(message)
        self.partial_rows = partial_rows or []
