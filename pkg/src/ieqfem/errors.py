"""Exception hierarchy shared across the package."""


class IeqFemError(Exception):
    """Base class for all errors raised by ieqfem."""


class ConfigError(IeqFemError, ValueError):
    """Invalid configuration or precondition violation.

    ``key`` names the offending configuration entry when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = ""
        if key is not None:
            prefix += f"{key}: "
        if line is not None:
            prefix = f"line {line}: " + prefix
        super().__init__(prefix + message)


class StructuralError(IeqFemError, ValueError):
    """Block layout or shape mismatch."""


class LinearSolverError(IeqFemError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None, pivot_row=None):
        self.residual = residual
        self.iterations = iterations
        self.pivot_row = pivot_row
        super().__init__(message)


class PotentialDomainError(IeqFemError, ValueError):
    """F(u) + B is not positive, so the auxiliary variable is undefined."""


class IdentityCheckError(IeqFemError, AssertionError):
    """A discrete energy identity or conservation law failed at runtime."""

    def __init__(self, message, step=None, time=None):
        self.step = step
        self.time = time
        super().__init__(message)
