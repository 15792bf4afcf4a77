"""Exception types shared across the package."""


class ShotQsdError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(ShotQsdError, ValueError):
    """A physical or numerical parameter violates its documented constraint."""


class GridMismatchError(ShotQsdError, ValueError):
    """Two time-discretized inputs do not share the same grid."""


class DivergenceError(ShotQsdError, RuntimeError):
    """A Riccati trajectory exceeded the blow-up guard.

    Attributes
    ----------
    blow_time : float
        Time at which |Q| first exceeded the guard.
    """

    def __init__(self, blow_time: float, guard: float):
        self.blow_time = blow_time
        self.guard = guard
        super().__init__(
            f"|Q| exceeded the divergence guard {guard:g} at t = {blow_time:.6g}"
        )


class DivergenceBudgetError(ShotQsdError, RuntimeError):
    """Too many trajectories of an ensemble diverged (budget is 1%)."""

    def __init__(self, excluded: int, total: int):
        self.excluded = excluded
        self.total = total
        super().__init__(
            f"{excluded} of {total} trajectories diverged; budget is 1%"
        )


class ConfigError(ShotQsdError, ValueError):
    """Configuration text failed validation.

    Collects *all* problems found, not just the first one.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))
