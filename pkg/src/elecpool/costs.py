"""Producer cost curves.

A production cost is modeled as a polynomial

    C(e) = c_1 e + c_2 e^2 + ... + c_d e^d

with non-negative coefficients, no constant term, a strictly positive linear
term, and at least one term of order two or higher.  On that class C(0) = 0,
C is strictly increasing, C is strictly convex for e > 0, and the marginal
cost C' is strictly increasing everywhere, so the inverse-marginal query has
a unique answer that monotone bisection can locate.

Requiring c_1 > 0 is deliberately stricter than "increasing": it keeps the
marginal cost bounded away from zero, which gives clean price brackets to the
dispatch solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidCostError

# Clause labels reported by validate_cost.
CLAUSE_EMPTY = "at least one coefficient"
CLAUSE_FINITE = "finite, non-negative coefficients"
CLAUSE_INCREASING = "c_1 > 0"
CLAUSE_CONVEX = "strict convexity"


@dataclass(frozen=True)
class CostFunction:
    """Polynomial production cost in $ for a production level in MWh.

    ``coefficients[k - 1]`` weights e**k; there is no constant term, so
    producing nothing always costs nothing.  Instances are immutable and all
    queries are pure, so they can be shared freely across threads.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "coefficients", tuple(float(c) for c in self.coefficients)
        )

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def value(self, e: float) -> float:
        """Total cost C(e), by Horner accumulation.

        Args:
            e: production in MWh, must be non-negative.
        """
        _check_quantity(e)
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * e + c
        return acc * e

    def marginal(self, e: float) -> float:
        """Marginal cost C'(e) = sum_k k c_k e^(k-1)."""
        _check_quantity(e)
        acc = 0.0
        for k in range(self.degree, 0, -1):
            acc = acc * e + k * self.coefficients[k - 1]
        return acc

    def curvature(self, e: float) -> float:
        """Second derivative C''(e); strictly positive for e > 0 on valid costs."""
        _check_quantity(e)
        acc = 0.0
        for k in range(self.degree, 1, -1):
            acc = acc * e + k * (k - 1) * self.coefficients[k - 1]
        return acc

    def value_many(self, e: np.ndarray) -> np.ndarray:
        """Vectorized value() without the sign check, for grid scans."""
        return np.polyval(self._polyval_coefficients, e)

    @cached_property
    def _polyval_coefficients(self) -> np.ndarray:
        return np.array(list(reversed(self.coefficients)) + [0.0])

    def inverse_marginal(
        self, price: float, cap: float, tol: float = 1e-12, max_iter: int = 200
    ) -> float:
        """Production level at which the marginal cost reaches ``price``.

        Returns the unique root of C'(e) = price clamped to [0, cap], located
        by monotone bisection to absolute tolerance ``tol`` in e.  The clamped
        corners are returned exactly (0.0 or cap), so callers can detect
        binding constraints by float equality.

        Args:
            price: target marginal cost, must be non-negative.
            cap: upper clamp, must be positive.
            tol: absolute bisection tolerance on e.
            max_iter: hard iteration cap; generous for any bracket at tol.
        """
        if price < 0.0:
            raise ValueError("price must be non-negative")
        if not cap > 0.0:
            raise ValueError("cap must be positive")
        cap = float(cap)
        if self.marginal(0.0) >= price:
            return 0.0
        if self.marginal(cap) <= price:
            return cap
        lo, hi = 0.0, cap
        for _ in range(max_iter):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if self.marginal(mid) < price:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Producer:
    """One generating firm: identifier, capacity in MWh, and its cost curve."""

    id: int
    capacity: float
    cost: CostFunction

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "capacity", float(self.capacity))


@dataclass(frozen=True)
class CostValidation:
    """Outcome of validate_cost: ``ok`` plus the violated clauses, if any."""

    ok: bool
    violations: tuple[tuple[str, str], ...] = ()

    def clauses(self) -> tuple[str, ...]:
        return tuple(clause for clause, _ in self.violations)


def validate_cost(cost: CostFunction) -> CostValidation:
    """Check a cost function against the admissible class.

    Zero cost at zero production is structural (the representation has no
    constant term); the remaining clauses are checked explicitly.  Returns a
    structured result identifying every violated clause and never raises.
    """
    violations: list[tuple[str, str]] = []
    cs = cost.coefficients
    if len(cs) == 0:
        violations.append((CLAUSE_EMPTY, "coefficient list is empty"))
        return CostValidation(False, tuple(violations))
    for k, c in enumerate(cs, start=1):
        if not math.isfinite(c) or c < 0.0:
            violations.append(
                (CLAUSE_FINITE, f"c_{k} = {c!r} is not a finite non-negative number")
            )
    if not violations:
        if cs[0] <= 0.0:
            violations.append(
                (CLAUSE_INCREASING, "the linear coefficient must be strictly positive")
            )
        if not any(c > 0.0 for c in cs[1:]):
            violations.append(
                (CLAUSE_CONVEX, "some coefficient of order >= 2 must be strictly positive")
            )
    return CostValidation(not violations, tuple(violations))


def require_valid_cost(cost: CostFunction) -> None:
    """Raise InvalidCostError when validate_cost rejects the function."""
    result = validate_cost(cost)
    if not result.ok:
        raise InvalidCostError(
            "; ".join(f"{clause} ({detail})" for clause, detail in result.violations)
        )


def _check_quantity(e: float) -> None:
    if e < 0.0:
        raise ValueError("production must be non-negative")
