"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a mathematical precondition (negative entry, value
    outside the function's domain, non-stochastic matrix, ...)."""


class DimensionError(DomainError):
    """Matrix shape incompatible with the requested operation."""


class SizeLimitError(RuntimeError):
    """Problem size exceeds a hard budget of an exact algorithm."""


class ZeroPermanentError(DomainError):
    """The support of the matrix admits no perfect matching, so the
    permanent is exactly zero and scaling-based machinery does not apply."""


class NonConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance.

    Carries the best partial result so callers can degrade gracefully.
    """

    def __init__(self, message, partial=None, best_value=None):
        super().__init__(message)
        self.partial = partial
        self.best_value = best_value
