"""Exception hierarchy shared by all modules."""


class FPResampleError(Exception):
    """Base class for package errors."""


class InvalidArgument(FPResampleError, ValueError):
    """An argument is outside the operation's domain."""


class NumericFailure(FPResampleError, RuntimeError):
    """An iterative or Monte Carlo routine did not produce a usable result.

    ``diagnostics`` carries whatever state helps to explain the failure
    (iteration counts, residuals, failure fractions).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SizeLimitError(FPResampleError, ValueError):
    """Exact enumeration requested for a population that is too large."""


class SingularKernelError(FPResampleError, ZeroDivisionError):
    """Covariance kernel undefined because d = E[pi (1 - pi)] is zero."""


class DegenerateCellError(FPResampleError, ValueError):
    """A conditioning cell (stratum) has too few sampled units."""

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = tuple(cells)


class ConfigError(FPResampleError, ValueError):
    """Scenario configuration is missing, malformed or inconsistent."""


class NumericWarning(UserWarning):
    """A numerically degenerate but usable result (e.g. a zero-width interval)."""
