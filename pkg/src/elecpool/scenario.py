"""Market instances and their validation.

A scenario bundles the producers, the fixed inelastic demand, and the constant
utility the demand side attaches to being served.  Validation failures carry
stable rule codes so the CLI and tests can point at the exact rule a file
violates:

    A1      at least four producers (relaxable for small unit-test markets)
    A3      capacities are finite and strictly positive
    A5      every cost curve passes validate_cost
    A7      demand is finite, non-negative, and within total capacity
    A8      the consumer utility constant is finite
    schema  producer ids are not 1..N in file order

The codes index the market model's standing assumptions and are part of the
error-reporting contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .costs import Producer, validate_cost
from .errors import InvalidScenarioError, ValidationIssue

MIN_PRODUCERS = 4


@dataclass(frozen=True)
class Scenario:
    """One pooling-market instance.

    Attributes:
        producers: the N firms, in index order.
        demand: fixed consumption D0 in MWh; the market must cover it.
        consumer_utility: constant utility the demand side gains from being
            served, in $; only shifts welfare, never allocations.
        relax_min_producers: allow N < 4 (recorded on the instance so reports
            show when the small-market relaxation was used).
    """

    producers: tuple[Producer, ...]
    demand: float
    consumer_utility: float = 0.0
    relax_min_producers: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "producers", tuple(self.producers))
        object.__setattr__(self, "demand", float(self.demand))
        object.__setattr__(self, "consumer_utility", float(self.consumer_utility))
        object.__setattr__(self, "relax_min_producers", bool(self.relax_min_producers))

    @property
    def n(self) -> int:
        return len(self.producers)

    @property
    def capacities(self) -> tuple[float, ...]:
        return tuple(p.capacity for p in self.producers)

    @property
    def total_capacity(self) -> float:
        return math.fsum(p.capacity for p in self.producers)

    def cost(self, i: int):
        """Cost curve of producer at 0-based position i."""
        return self.producers[i].cost


@dataclass(frozen=True)
class ProductionProfile:
    """A scheduled production level per producer, in MWh."""

    quantities: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "quantities", tuple(float(q) for q in self.quantities)
        )

    def __len__(self) -> int:
        return len(self.quantities)

    def total(self) -> float:
        return math.fsum(self.quantities)


def validate_scenario(scenario: Scenario) -> tuple[ValidationIssue, ...]:
    """Check every admissibility rule; returns the tagged issues, empty if valid."""
    issues: list[ValidationIssue] = []
    n = scenario.n
    if n < 1:
        issues.append(ValidationIssue("A1", "at least one producer is required"))
    elif n < MIN_PRODUCERS and not scenario.relax_min_producers:
        issues.append(
            ValidationIssue(
                "A1",
                f"{n} producers given but at least {MIN_PRODUCERS} are required "
                "(set relax_min_producers for small test markets)",
            )
        )
    for position, producer in enumerate(scenario.producers, start=1):
        if producer.id != position:
            issues.append(
                ValidationIssue(
                    "schema",
                    f"producer ids must be 1..N in order; position {position} has id {producer.id}",
                )
            )
        if not (math.isfinite(producer.capacity) and producer.capacity > 0.0):
            issues.append(
                ValidationIssue(
                    "A3",
                    f"producer {producer.id}: capacity must be finite and positive, got {producer.capacity!r}",
                )
            )
        check = validate_cost(producer.cost)
        for clause, detail in check.violations:
            issues.append(
                ValidationIssue("A5", f"producer {producer.id}: {clause} ({detail})")
            )
    if not math.isfinite(scenario.demand) or scenario.demand < 0.0:
        issues.append(
            ValidationIssue(
                "A7", f"demand must be finite and non-negative, got {scenario.demand!r}"
            )
        )
    elif n >= 1 and scenario.demand > scenario.total_capacity:
        issues.append(
            ValidationIssue(
                "A7",
                f"demand {scenario.demand!r} exceeds total capacity {scenario.total_capacity!r}",
            )
        )
    if not math.isfinite(scenario.consumer_utility):
        issues.append(
            ValidationIssue(
                "A8", f"consumer utility must be finite, got {scenario.consumer_utility!r}"
            )
        )
    return tuple(issues)


def require_valid_scenario(scenario: Scenario) -> None:
    issues = validate_scenario(scenario)
    if issues:
        raise InvalidScenarioError(issues)
