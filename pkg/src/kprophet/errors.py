"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A request is structurally invalid (bad policy, bad instance, bad flags)."""


class NumericError(ArithmeticError):
    """A computation produced non-finite or otherwise unusable numbers."""


class ResourceLimitError(RuntimeError):
    """An exhaustive computation was asked to exceed its enumeration budget."""
