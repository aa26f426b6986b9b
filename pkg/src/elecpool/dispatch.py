"""Centralized least-cost dispatch with first-order optimality certificates.

The operator's problem is to cover the fixed demand at minimum total
production cost subject to the per-producer capacity boxes.  Because every
marginal cost is strictly increasing, the demand constraint binds at the
optimum and the aggregate supply curve

    S(price) = sum_i clamp_to_capacity( (C_i')^{-1}(price) )

is continuous and non-decreasing, so the clearing price comes out of a plain
bisection on S(price) = demand.  The solver never trusts itself: every solve
also emits the multipliers of the demand, capacity, and non-negativity
constraints together with max-norm residuals of the full first-order system,
computed by the same kkt_residuals() that tests run on hand-built candidates.

brute_force_dispatch() is an intentionally independent check: a stage-wise
tabulation over producers of the cheapest way to hit each grid total.  It
shares no code path with the bisection solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DispatchError, OracleBudgetError
from .scenario import ProductionProfile, Scenario, require_valid_scenario

# Bisection controls: the price bracket is narrowed until it is resolved to
# float precision, which is what keeps certificate residuals near machine
# epsilon instead of near the feasibility tolerance.
_PRICE_ITER_CAP = 200
_PRICE_WIDTH_EPS = 1e-15
_INVERSE_TOL = 1e-13


@dataclass(frozen=True)
class KKTResiduals:
    """Max-norm violations of the dispatch first-order system."""

    stationarity: float
    complementarity: float
    dual: float
    primal: float

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.complementarity, self.dual, self.primal)

    def as_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "complementarity": self.complementarity,
            "dual": self.dual,
            "primal": self.primal,
        }


@dataclass(frozen=True)
class KKTCertificate:
    """Multipliers and residuals certifying a dispatch as optimal.

    Attributes:
        price: shadow price of the demand constraint (the clearing price).
        capacity_rents: multiplier per producer on e_i <= x_i; the scarcity
            value of one more MWh of that producer's capacity.
        idle_margins: multiplier per producer on e_i >= 0; how far the
            producer's entry marginal cost sits above the clearing price.
        *_residual: max-norm violations; feasibility covers the primal
            constraints (boxes and demand coverage).
    """

    price: float
    capacity_rents: tuple[float, ...]
    idle_margins: tuple[float, ...]
    stationarity_residual: float
    complementarity_residual: float
    feasibility_residual: float


@dataclass(frozen=True)
class DispatchResult:
    profile: ProductionProfile
    certificate: KKTCertificate
    residuals: KKTResiduals
    total_cost: float


def production_cost(scenario: Scenario, quantities) -> float:
    """Total production cost of a profile (any sequence or ProductionProfile)."""
    qs = getattr(quantities, "quantities", quantities)
    return math.fsum(
        p.cost.value(float(q)) for p, q in zip(scenario.producers, qs, strict=True)
    )


def price_ceiling(scenario: Scenario) -> float:
    """A price at which every producer would run at full capacity."""
    return max(p.cost.marginal(p.capacity) for p in scenario.producers)


def aggregate_supply(scenario: Scenario, price: float) -> float:
    """Total capacity-clamped production with marginal cost at the given price."""
    return math.fsum(
        p.cost.inverse_marginal(price, p.capacity, tol=_INVERSE_TOL)
        for p in scenario.producers
    )


def solve_dispatch(
    scenario: Scenario, tol: float = 1e-9, bracket_hi: float | None = None
) -> DispatchResult:
    """Solve the centralized dispatch and certify it.

    Args:
        scenario: a valid market instance (validated again here).
        tol: acceptance tolerance on |total production - demand|; the
            bisection itself runs to float precision, so realized gaps are
            typically far below tol.
        bracket_hi: optional upper end of the price bracket, for probing that
            the answer does not depend on the bracket.  Values below the
            natural ceiling are raised to it.

    Returns:
        DispatchResult with the unique optimal profile, its certificate, the
        residual report, and the total cost.

    Raises:
        InvalidScenarioError: if the scenario fails validation.
        DispatchError: if the certified gap exceeds tol (not reachable on a
            validated scenario; kept as an honest guard).
    """
    require_valid_scenario(scenario)
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    producers = scenario.producers
    demand = scenario.demand

    if demand == 0.0:
        quantities = tuple(0.0 for _ in producers)
        rents = tuple(0.0 for _ in producers)
        margins = tuple(p.cost.marginal(0.0) for p in producers)
        return _certified(scenario, quantities, 0.0, rents, margins, tol)

    hi = price_ceiling(scenario)
    if bracket_hi is not None:
        hi = max(hi, float(bracket_hi))
    lo = 0.0
    width_floor = _PRICE_WIDTH_EPS * max(1.0, hi)
    for _ in range(_PRICE_ITER_CAP):
        if hi - lo <= width_floor:
            break
        mid = 0.5 * (lo + hi)
        if aggregate_supply(scenario, mid) >= demand:
            hi = mid
        else:
            lo = mid
    price = hi  # the bracket side with supply >= demand

    quantities = tuple(
        p.cost.inverse_marginal(price, p.capacity, tol=_INVERSE_TOL) for p in producers
    )
    # Multiplier recovery: corners are exact floats from inverse_marginal, so
    # equality tests are reliable.  At a capacity corner where the marginal
    # already equals the price, max() picks the minimal (zero) rent.
    rents = tuple(
        max(0.0, price - p.cost.marginal(p.capacity)) if q == p.capacity else 0.0
        for p, q in zip(producers, quantities)
    )
    margins = tuple(
        max(0.0, p.cost.marginal(0.0) - price) if q == 0.0 else 0.0
        for p, q in zip(producers, quantities)
    )
    return _certified(scenario, quantities, price, rents, margins, tol)


def _certified(
    scenario: Scenario,
    quantities: tuple[float, ...],
    price: float,
    rents: tuple[float, ...],
    margins: tuple[float, ...],
    tol: float,
) -> DispatchResult:
    gap = abs(math.fsum(quantities) - scenario.demand)
    if gap > tol:
        raise DispatchError(
            f"clearing failed: |supply - demand| = {gap:.3e} exceeds tol = {tol:g}"
        )
    profile = ProductionProfile(quantities)
    certificate = KKTCertificate(
        price=price,
        capacity_rents=rents,
        idle_margins=margins,
        stationarity_residual=0.0,
        complementarity_residual=0.0,
        feasibility_residual=0.0,
    )
    residuals = kkt_residuals(scenario, profile, certificate)
    certificate = replace(
        certificate,
        stationarity_residual=residuals.stationarity,
        complementarity_residual=residuals.complementarity,
        feasibility_residual=residuals.primal,
    )
    return DispatchResult(
        profile=profile,
        certificate=certificate,
        residuals=residuals,
        total_cost=production_cost(scenario, profile),
    )


def kkt_residuals(
    scenario: Scenario, profile: ProductionProfile, certificate: KKTCertificate
) -> KKTResiduals:
    """Max-norm violations of the first-order system for a candidate solution.

    Checks stationarity (C_i' - price + rent_i - margin_i), complementary
    slackness of the demand, capacity, and non-negativity constraints, dual
    feasibility (no negative multiplier), and primal feasibility (boxes plus
    demand coverage).  Reports only; never raises.
    """
    qs = profile.quantities
    price = certificate.price
    rents = certificate.capacity_rents
    margins = certificate.idle_margins
    total = math.fsum(qs)
    demand = scenario.demand

    stationarity = 0.0
    complementarity = abs(price * (total - demand))
    dual = max(0.0, -price)
    primal = max(0.0, demand - total)
    for p, q, rent, margin in zip(scenario.producers, qs, rents, margins, strict=True):
        stationarity = max(
            stationarity, abs(p.cost.marginal(q) - price + rent - margin)
        )
        complementarity = max(
            complementarity, abs(rent * (p.capacity - q)), abs(margin * q)
        )
        dual = max(dual, -rent, -margin)
        primal = max(primal, -q, q - p.capacity)
    return KKTResiduals(
        stationarity=stationarity,
        complementarity=complementarity,
        dual=dual,
        primal=primal,
    )


def brute_force_dispatch(
    scenario: Scenario, step: float, cell_budget: int = 50_000_000
) -> ProductionProfile:
    """Least-total-cost production on a per-producer grid of the given step.

    Stage-wise tabulation over producers of the cheapest way to reach each
    grid total, followed by a reconstruction that breaks cost ties toward the
    lexicographically smallest profile.  Deliberately independent of
    solve_dispatch so it can serve as a test oracle.

    The realized total meets the demand up to grid quantization (within 1e-9
    of the smallest reachable grid total at or above demand).

    Raises:
        OracleBudgetError: if the tabulation would exceed cell_budget cells.
        DispatchError: if the grid cannot reach the demand (step too coarse
            relative to the capacities).
    """
    require_valid_scenario(scenario)
    if not step > 0.0:
        raise ValueError("step must be positive")
    n = scenario.n
    caps = scenario.capacities
    counts = [int(math.floor(c / step + 1e-9)) for c in caps]
    grids = [
        np.minimum(np.arange(k + 1, dtype=float) * step, cap)
        for k, cap in zip(counts, caps)
    ]
    reachable = math.fsum(float(g[-1]) for g in grids)
    if scenario.demand > reachable + 1e-9:
        raise DispatchError(
            f"grid with step {step:g} reaches only {reachable:g} MWh "
            f"but demand is {scenario.demand:g}; use a finer step"
        )
    suffix_counts = [0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix_counts[j] = suffix_counts[j + 1] + counts[j]
    cells = sum((counts[j] + 1) * (suffix_counts[j + 1] + 1) for j in range(n - 1))
    if cells > cell_budget:
        raise OracleBudgetError(
            f"tabulation needs {cells} cells, over the budget of {cell_budget}"
        )

    costs = [p.cost.value_many(g) for p, g in zip(scenario.producers, grids)]
    # best[j][q]: cheapest cost for producers j..N-1 to produce q grid steps.
    best: list[np.ndarray] = [np.empty(0)] * n
    best[n - 1] = costs[n - 1]
    for j in range(n - 2, -1, -1):
        nxt = best[j + 1]
        arr = np.full(counts[j] + len(nxt), np.inf)
        for k in range(counts[j] + 1):
            segment = arr[k : k + len(nxt)]
            np.minimum(segment, nxt + costs[j][k], out=segment)
        best[j] = arr

    top = len(best[0]) - 1
    q_min = min(top, max(0, int(math.ceil(scenario.demand / step - 1e-9))))
    target = q_min + int(np.argmin(best[0][q_min:]))

    quantities: list[float] = []
    t = target
    for j in range(n - 1):
        goal = float(best[j][t])
        k_lo = max(0, t - (len(best[j + 1]) - 1))
        k_hi = min(counts[j], t)
        chosen = None
        for k in range(k_lo, k_hi + 1):
            if float(costs[j][k]) + float(best[j + 1][t - k]) == goal:
                chosen = k
                break
        if chosen is None:  # float-identity fallback; not expected to trigger
            ks = np.arange(k_lo, k_hi + 1)
            chosen = int(ks[int(np.argmin(costs[j][ks] + best[j + 1][t - ks]))])
        quantities.append(float(grids[j][chosen]))
        t -= chosen
    quantities.append(float(grids[n - 1][t]))
    return ProductionProfile(tuple(quantities))


def supply_curve(
    scenario: Scenario, prices: Sequence[float]
) -> list[tuple[float, float]]:
    """Sampled (price, total supply) pairs, for plotting the clearing cross."""
    return [(float(p), aggregate_supply(scenario, float(p))) for p in prices]
