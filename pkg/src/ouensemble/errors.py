"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid population spec, ensemble parameters, or run configuration."""


class InputError(ValueError):
    """Invalid arguments passed to an operation."""


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class DivergenceError(ArithmeticError):
    """A quadrature failed to converge because the integral diverges."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
