"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical parameter bundle failed validation."""

    def __init__(self, name, message):
        self.name = name
        super().__init__(f"{name}: {message}")


class ConfigError(ValueError):
    """A run configuration could not be parsed; ``key`` names the offender."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class NumericalError(RuntimeError):
    """A numerical self-check failed (quadrature window, grid, step size...)."""


class WindowError(NumericalError):
    pass


class GridError(NumericalError):
    pass


class TruncatedPulseError(NumericalError):
    pass


class StepSizeError(NumericalError):
    pass
