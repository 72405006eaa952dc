"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent with the model."""


class DataError(ValueError):
    """A piano-roll file or dataset failed validation."""


class BudgetError(RuntimeError):
    """Exact enumeration was requested beyond the configured size budget."""
