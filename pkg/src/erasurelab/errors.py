"""Exception types and enumeration-budget helpers shared across modules."""

import os


class ErasureLabError(Exception):
    """Base class for all library errors."""


class ValidationError(ErasureLabError, ValueError):
    """An input violates a documented precondition."""


class InfeasibleScheduleError(ErasureLabError):
    """The rate schedule gives fewer than two codewords (or too many)."""


class BudgetExceededError(ErasureLabError):
    """An exhaustive enumeration would exceed its work budget."""


class ConvergenceError(ErasureLabError):
    """An iterative solver stopped before meeting its tolerance.

    ``best`` carries the last iterate so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DerandomizationError(ErasureLabError):
    """No candidate codebook met the Markov-inequality budget."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


class AmbiguousCaidError(ErasureLabError):
    """The capacity-achieving input distribution cannot be pinned down."""


BUDGET_ENV = "ERASURELAB_BUDGET_OVERRIDE"


def budget_lifted():
    """True when the environment asks to lift enumeration caps."""
    return os.environ.get(BUDGET_ENV, "").strip().lower() not in ("", "0", "false", "no")


def check_budget(work, cap, what):
    if work > cap and not budget_lifted():
        raise BudgetExceededError(
            f"{what}: {work} exceeds enumeration budget {cap} (set {BUDGET_ENV}=1 to lift)"
        )
