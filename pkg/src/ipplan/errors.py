"""Exception types shared across the package."""

from __future__ import annotations


class IpplanError(Exception):
    """Base class for package-specific failures."""


class NumericalError(IpplanError):
    """A matrix factorization or solve failed (non-SPD input, singular system)."""


class InfeasibleBudgetError(IpplanError, ValueError):
    """The budget is below the cheapest start-to-goal completion."""


class BoundInconsistencyError(IpplanError):
    """A certified lower bound exceeded a feasible upper bound: internal bug."""
