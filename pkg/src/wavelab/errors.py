"""Exception hierarchy shared across the package."""


class WavelabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(WavelabError):
    """Invalid parameters: bad grid sizes, out-of-range symbols, malformed configs."""


class ValidationError(WavelabError):
    """Data failed a structural check (non-even table, broken Hermitian symmetry, ...)."""


class DomainError(WavelabError):
    """An operation was evaluated outside its mathematical domain (penalizer pole, mu = 0, ...)."""


class SolverFailure(WavelabError):
    """A solve stage could not reach its tolerance; carries the last iterate when possible."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
