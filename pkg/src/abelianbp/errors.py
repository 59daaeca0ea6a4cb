"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input fails a structural or invariant check."""


class NumericalError(RuntimeError):
    """Raised when a numerical procedure fails (non-convergence, PSD breach, ...)."""
