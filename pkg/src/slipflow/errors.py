"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value violates a validation gate."""


class PositivityError(RuntimeError):
    """A density field lost positivity at some collocation point."""


class StepSizeError(RuntimeError):
    """A time step violates a stability constraint (CFL or blow-up)."""


class ConvergenceError(RuntimeError):
    """An iterative solve exhausted its iteration budget."""
