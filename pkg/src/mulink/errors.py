"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a documented precondition (dimensions, ranges, rank)."""


class DegenerateScheduleError(DomainError):
    """Scheduled channel rows are too close to collinear to zero-force."""


class ResourceLimitError(DomainError):
    """Request would exceed the configured memory budget."""


class ConfigError(ValueError):
    """Scenario configuration is malformed.  ``path`` points at the field."""

    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path

    def __str__(self):
        base = super().__str__()
        return f"{self.path}: {base}" if self.path else base


class NumericError(RuntimeError):
    """A numeric computation failed to produce a finite result."""
