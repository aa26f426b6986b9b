"""Exception types and the tagged validation issue record shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ValidationIssue:
    """One violated admissibility rule.

    ``tag`` is a stable rule code (A1..A10 for the market model's standing
    assumptions, ``schema`` for file-shape problems) so callers and tests can
    point at the exact rule an input violates.
    """

    tag: str
    message: str

    def __str__(self) -> str:
        return f"{self.tag}: {self.message}"


class PoolError(Exception):
    """Base class for every error raised by this package."""


class InvalidCostError(PoolError):
    """A cost function failed validation."""


class InvalidScenarioError(PoolError):
    """A market scenario failed validation; carries the tagged issues."""

    def __init__(self, issues) -> None:
        self.issues: tuple[ValidationIssue, ...] = tuple(issues)
        super().__init__("invalid scenario: " + "; ".join(str(i) for i in self.issues))


class MechanismError(PoolError):
    """A message profile is not admissible for the scenario."""


class DispatchError(PoolError):
    """The dispatch solver could not produce a certified solution."""


class OracleBudgetError(PoolError):
    """The enumeration oracle would exceed its configured cell budget."""


class EquilibriumError(PoolError):
    """Equilibrium construction is not possible for the scenario."""


class FileFormatError(PoolError):
    """An input file could not be parsed or has the wrong shape."""
