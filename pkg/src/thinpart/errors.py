"""Exception hierarchy shared by all modules."""


class ThinpartError(Exception):
    """Base class for library errors."""


class InvalidArgument(ThinpartError, ValueError):
    pass


class InvalidDomain(InvalidArgument):
    pass


class InvalidPartition(InvalidArgument):
    pass


class DegenerateInput(InvalidArgument):
    pass


class NumericalFailure(ThinpartError, RuntimeError):
    """Raised when an iterative or root-finding method does not converge.

    ``details`` carries whatever diagnostics the caller can use (best
    residuals, bracketing intervals, ...).
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class StructuralError(ThinpartError):
    """A subdomain is not what the caller assumed (e.g. disconnected)."""
