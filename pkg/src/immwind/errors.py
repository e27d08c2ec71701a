"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input is outside the physical domain an operation is defined on."""


class NumericalError(RuntimeError):
    """A filter or simulation became numerically invalid (e.g. S <= 0)."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or violates an invariant."""
