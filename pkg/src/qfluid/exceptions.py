"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a statistics function or operator."""


class SupercriticalError(DomainError):
    """Bose-Einstein density at or above the critical density (condensation)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnsupportedBranchError(DomainError):
    """No asymptotic formula exists for the requested statistics branch."""


class ConvergenceError(ArithmeticError):
    """An iterative or quadrature method could not reach its tolerance."""


class NumericalAbort(RuntimeError):
    """Time integration produced NaN or blew up."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time
