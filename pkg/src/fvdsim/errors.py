"""Exception hierarchy shared by all fvdsim modules."""


class FvdsimError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(FvdsimError, ValueError):
    """A physical or numerical parameter violates its contract."""


class NumericalFailureError(FvdsimError, RuntimeError):
    """An iterative routine did not converge.

    Carries the best residual achieved so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CapabilityError(FvdsimError, RuntimeError):
    """The request exceeds what this build can compute (e.g. dense oracle size)."""


class ScheduleDomainError(FvdsimError, ValueError):
    """A waveform was evaluated outside its breakpoint range."""


class WindowNotFoundError(FvdsimError, RuntimeError):
    """The 10-90% amplitude thresholds were never crossed on the interval."""


class FitDomainError(FvdsimError, ValueError):
    """Fit input violates the fit's domain (too few points, non-positive values)."""


class ConfigError(FvdsimError, ValueError):
    """Configuration file or flag contents are invalid."""


class OutputExistsError(FvdsimError, RuntimeError):
    """Refusing to overwrite a previous run's outputs without --force."""
