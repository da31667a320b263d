"""Exception types shared across the package."""


class AdmissibilityError(ValueError):
    """A refinement region is not a valid hierarchical subdomain."""

    def __init__(self, level: int, message: str):
        super().__init__(f"level {level}: {message}")
        self.level = level


class ConsistencyError(RuntimeError):
    """Two independently derived structures disagree (indicates a bug)."""


class GaugeError(RuntimeError):
    """The gauged system could not be formed, e.g. a rank-deficient pencil."""
