"""Equilibria of the induced game: construction, certification, audits.

Two equilibria are known in closed form.  The trivial one has every producer
proposing (0, 0).  The non-trivial one re-uses the centralized dispatch: every
producer proposes its optimal production and the common clearing price.

Certification never trusts first-order conditions, because a producer's
utility is not jointly concave in its own message away from equilibrium.
Instead best_response() scans a dense quantity grid (the optimal own price
for a fixed quantity has the closed form max(0, successor price - gap^2), so
the search is one-dimensional), refines locally by golden section, and the
epsilon certificate is the largest utility any producer can gain by the best
deviation found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dispatch import DispatchResult, production_cost, solve_dispatch
from .errors import EquilibriumError
from .mechanism import (
    Allocation,
    Message,
    MessageProfile,
    _tax_terms,
    budget_ledger,
    normalize_profile,
    outcome,
    producer_utilities,
)
from .scenario import Scenario

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    """Best-response search: dense quantity grid, then local golden polish."""

    grid: int = 4001
    refine_iters: int = 60

    def __post_init__(self) -> None:
        if self.grid < 3:
            raise ValueError("grid must have at least 3 points")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be non-negative")


@dataclass(frozen=True)
class BestResponse:
    """Best deviation found for one producer, holding the others fixed.

    ``gain`` is the utility improvement over the producer's current message,
    floored at zero; when nothing found beats the current message, the current
    message itself is returned and the gain is exactly 0.0.
    """

    message: Message
    utility: float
    gain: float


@dataclass(frozen=True)
class IdentityResiduals:
    """Residuals of the identities every non-trivial equilibrium satisfies.

    price_uniformity: largest cyclic price disagreement |p_i - p_{i+1}|.
    balance: |p_ref * (total production - demand)|.
    tax_linearity: largest |t_i - p_ref * e_i|.
    tax_gradient: largest |dt_i/de_i - p_ref| with the analytic derivative
        p_{i+1} + 4 p_i (demand - total production).
    """

    price_uniformity: float
    balance: float
    tax_linearity: float
    tax_gradient: float
    reference_price: float

    @property
    def worst(self) -> float:
        return max(
            self.price_uniformity, self.balance, self.tax_linearity, self.tax_gradient
        )

    def ok(self, tol: float) -> bool:
        return self.worst <= tol

    def as_dict(self) -> dict:
        return {
            "price_uniformity": self.price_uniformity,
            "balance": self.balance,
            "tax_linearity": self.tax_linearity,
            "tax_gradient": self.tax_gradient,
            "reference_price": self.reference_price,
        }


@dataclass(frozen=True)
class FeatureCheck:
    name: str
    passed: bool
    residual: float
    detail: dict

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "residual": self.residual,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class FeatureAudit:
    """Pass/fail audit of the mechanism's advertised properties at a profile."""

    feasibility: FeatureCheck
    individual_rationality: FeatureCheck
    budget_balance: FeatureCheck
    price_efficiency: FeatureCheck
    dispatch_optimality: FeatureCheck

    def checks(self) -> tuple[FeatureCheck, ...]:
        return (
            self.feasibility,
            self.individual_rationality,
            self.budget_balance,
            self.price_efficiency,
            self.dispatch_optimality,
        )

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks())

    def as_dict(self) -> dict:
        return {check.name: check.as_dict() for check in self.checks()}


@dataclass(frozen=True)
class EquilibriumReport:
    """Everything known about one candidate equilibrium."""

    kind: str  # "trivial" | "nontrivial"
    profile: MessageProfile
    price: float
    epsilon: float
    certified: bool
    gains: tuple[float, ...]
    identities: IdentityResiduals
    features: FeatureAudit
    allocation: Allocation
    utilities: tuple[float, ...]
    dispatch: DispatchResult


def trivial_equilibrium(scenario: Scenario) -> MessageProfile:
    """The all-zero message profile; a fixed point for every scenario."""
    return MessageProfile(tuple(Message(0.0, 0.0) for _ in scenario.producers))


def best_response(
    i: int,
    profile: MessageProfile,
    scenario: Scenario,
    search: SearchConfig = SearchConfig(),
) -> BestResponse:
    """Best deviation for producer i against the others' fixed messages.

    For a fixed own quantity q the utility is concave in the own price with
    unconstrained maximizer (successor price - gap(q)^2), so only the quantity
    needs searching.  Candidates are the dense grid argmax, golden-section
    refinements around it and around the market-balancing quantity, and the
    interval endpoints; the producer's current message wins ties.
    """
    prof = normalize_profile(profile, scenario)
    msgs = prof.messages
    n = len(msgs)
    me = msgs[i]
    producer = scenario.producers[i]
    cap = producer.capacity
    cost = producer.cost
    price_next = msgs[(i + 1) % n].price
    rest = math.fsum(m.quantity for j, m in enumerate(msgs) if j != i)
    slack = scenario.demand - rest  # the quantity that would balance the market

    def utility_at(q: float, p: float) -> float:
        gap = slack - q
        receipt, penalty = _tax_terms(p, price_next, q, gap * gap)
        return -cost.value(q) + (receipt + penalty)

    def scored(q: float) -> tuple[float, float]:
        gap = slack - q
        p = price_next - gap * gap
        if p < 0.0:
            p = 0.0
        return utility_at(q, p), p

    qs = np.linspace(0.0, cap, search.grid)
    gaps = slack - qs
    gap_sq = gaps * gaps
    ps = np.maximum(0.0, price_next - gap_sq)
    us = (
        -cost.value_many(qs)
        + price_next * qs
        - (ps - price_next) ** 2
        - 2.0 * ps * gap_sq
    )
    k = int(np.argmax(us))
    h = float(qs[1] - qs[0])

    candidates: list[tuple[float, float, float]] = []

    def consider(q: float) -> None:
        q = min(max(q, 0.0), cap)
        u, p = scored(q)
        candidates.append((u, q, p))

    consider(float(qs[k]))
    lo = float(qs[max(k - 1, 0)])
    hi = float(qs[min(k + 1, search.grid - 1)])
    consider(_golden_max(lambda q: scored(q)[0], lo, hi, search.refine_iters))
    if 0.0 <= slack <= cap:
        consider(slack)
        consider(
            _golden_max(
                lambda q: scored(q)[0],
                max(0.0, slack - h),
                min(cap, slack + h),
                search.refine_iters,
            )
        )
    consider(0.0)
    consider(cap)

    best_u, best_q, best_p = max(candidates, key=lambda c: c[0])
    current_u = utility_at(me.quantity, me.price)
    # improvements below float-noise scale are ties: chasing them would make
    # exact equilibria drift by one evaluation ulp per sweep
    tie_margin = 1e-11 * max(1.0, abs(current_u))
    if best_u > current_u + tie_margin:
        return BestResponse(Message(best_q, best_p), best_u, best_u - current_u)
    return BestResponse(me, current_u, 0.0)


def deviation_gains(
    profile: MessageProfile,
    scenario: Scenario,
    search: SearchConfig = SearchConfig(),
) -> tuple[float, ...]:
    """Per-producer best-deviation gains (each >= 0)."""
    return tuple(
        best_response(i, profile, scenario, search).gain for i in range(scenario.n)
    )


def verify_epsilon(
    profile: MessageProfile,
    scenario: Scenario,
    search: SearchConfig = SearchConfig(),
) -> float:
    """Certified equilibrium slack: the largest best-deviation gain, >= 0."""
    gains = deviation_gains(profile, scenario, search)
    return max(gains) if gains else 0.0


def audit_identities(profile: MessageProfile, scenario: Scenario) -> IdentityResiduals:
    """Residuals of the non-trivial-equilibrium identities at a profile.

    The reference price is the mean of the proposed prices (any choice agrees
    when the price-uniformity residual is zero).
    """
    prof = normalize_profile(profile, scenario)
    alloc = outcome(prof, scenario)
    msgs = prof.messages
    n = len(msgs)
    prices = prof.prices
    p_ref = math.fsum(prices) / n
    total = prof.total_quantity()
    signed_gap = scenario.demand - total

    price_uniformity = max(
        abs(prices[i] - prices[(i + 1) % n]) for i in range(n)
    )
    balance = abs(p_ref * (total - scenario.demand))
    tax_linearity = max(
        abs(t - p_ref * q) for t, q in zip(alloc.t, alloc.e, strict=True)
    )
    tax_gradient = max(
        abs(prices[(i + 1) % n] + 4.0 * prices[i] * signed_gap - p_ref)
        for i in range(n)
    )
    return IdentityResiduals(
        price_uniformity=price_uniformity,
        balance=balance,
        tax_linearity=tax_linearity,
        tax_gradient=tax_gradient,
        reference_price=p_ref,
    )


def audit_features(
    profile: MessageProfile,
    scenario: Scenario,
    tol: float = 1e-6,
    dispatch: DispatchResult | None = None,
) -> FeatureAudit:
    """Audit feasibility, rationality, budget, pricing, and optimality.

    Args:
        profile: the candidate (epsilon-)equilibrium to audit.
        tol: acceptance tolerance for every residual.
        dispatch: optional pre-computed centralized solution; solved here at
            default tolerance when omitted (needed for the optimality check).

    Producers within tol of a production bound are excluded from the marginal
    pricing check; for those at capacity the implied capacity rent
    (reference price minus marginal cost) is reported instead.
    """
    prof = normalize_profile(profile, scenario)
    alloc = outcome(prof, scenario)
    utilities = producer_utilities(prof, scenario, alloc)
    d = dispatch if dispatch is not None else solve_dispatch(scenario)
    prices = prof.prices
    p_ref = math.fsum(prices) / len(prices)

    gap = abs(prof.total_quantity() - scenario.demand)
    feasibility = FeatureCheck(
        name="feasibility",
        passed=gap <= tol,
        residual=gap,
        detail={"total_production": prof.total_quantity(), "demand": scenario.demand},
    )

    worst_u = min(utilities)
    individual_rationality = FeatureCheck(
        name="individual_rationality",
        passed=worst_u >= -tol,
        residual=max(0.0, -worst_u),
        detail={"utilities": list(utilities)},
    )

    net = budget_ledger(alloc).net
    budget_balance = FeatureCheck(
        name="budget_balance",
        passed=abs(net) <= tol,
        residual=abs(net),
        detail={"consumer_payment": alloc.consumer_payment},
    )

    producer_rows = []
    marginal_gap = 0.0
    for producer, q in zip(scenario.producers, alloc.e, strict=True):
        marginal = producer.cost.marginal(q)
        if q <= tol:
            row = {
                "producer": producer.id,
                "status": "idle",
                "marginal_cost": marginal,
                "entry_margin": marginal - p_ref,
            }
        elif q >= producer.capacity - tol:
            row = {
                "producer": producer.id,
                "status": "at_capacity",
                "marginal_cost": marginal,
                "capacity_rent": p_ref - marginal,
            }
        else:
            row = {
                "producer": producer.id,
                "status": "interior",
                "marginal_cost": marginal,
                "price_gap": abs(p_ref - marginal),
            }
            marginal_gap = max(marginal_gap, abs(p_ref - marginal))
        producer_rows.append(row)
    consumer_gap = abs(alloc.consumer_payment - p_ref * scenario.demand)
    price_efficiency = FeatureCheck(
        name="price_efficiency",
        passed=max(marginal_gap, consumer_gap) <= tol,
        residual=max(marginal_gap, consumer_gap),
        detail={
            "reference_price": p_ref,
            "consumer_payment_gap": consumer_gap,
            "producers": producer_rows,
        },
    )

    cost_here = production_cost(scenario, alloc.e)
    cost_gap = abs(cost_here - d.total_cost)
    dispatch_optimality = FeatureCheck(
        name="dispatch_optimality",
        passed=cost_gap <= tol,
        residual=cost_gap,
        detail={"total_cost": cost_here, "optimal_cost": d.total_cost},
    )

    return FeatureAudit(
        feasibility=feasibility,
        individual_rationality=individual_rationality,
        budget_balance=budget_balance,
        price_efficiency=price_efficiency,
        dispatch_optimality=dispatch_optimality,
    )


def construct_equilibrium(
    scenario: Scenario,
    solver_tol: float = 1e-9,
    search: SearchConfig = SearchConfig(),
    audit_tol: float = 1e-6,
    epsilon_threshold: float = 1e-4,
) -> EquilibriumReport:
    """Build and certify the non-trivial equilibrium from the dispatch solution.

    Every producer proposes its centrally optimal production and the common
    clearing price.  The report carries the certified epsilon, the identity
    residuals, and the full feature audit.

    Raises:
        EquilibriumError: when demand is zero (the only equilibrium is then
            the trivial one).
    """
    if not scenario.demand > 0.0:
        raise EquilibriumError("a non-trivial equilibrium requires positive demand")
    d = solve_dispatch(scenario, tol=solver_tol)
    price = d.certificate.price
    profile = MessageProfile(
        tuple(Message(q, price) for q in d.profile.quantities)
    )
    return _build_report("nontrivial", profile, scenario, d, search, audit_tol, epsilon_threshold)


def trivial_equilibrium_report(
    scenario: Scenario,
    solver_tol: float = 1e-9,
    search: SearchConfig = SearchConfig(),
    audit_tol: float = 1e-6,
    epsilon_threshold: float = 1e-4,
) -> EquilibriumReport:
    """Certify and audit the all-zero equilibrium (audits fail when demand > 0)."""
    d = solve_dispatch(scenario, tol=solver_tol)
    return _build_report(
        "trivial", trivial_equilibrium(scenario), scenario, d, search, audit_tol, epsilon_threshold
    )


def _build_report(
    kind: str,
    profile: MessageProfile,
    scenario: Scenario,
    dispatch: DispatchResult,
    search: SearchConfig,
    audit_tol: float,
    epsilon_threshold: float,
) -> EquilibriumReport:
    gains = deviation_gains(profile, scenario, search)
    epsilon = max(gains) if gains else 0.0
    alloc = outcome(profile, scenario)
    prices = profile.prices
    return EquilibriumReport(
        kind=kind,
        profile=profile,
        price=math.fsum(prices) / len(prices),
        epsilon=epsilon,
        certified=epsilon <= epsilon_threshold,
        gains=gains,
        identities=audit_identities(profile, scenario),
        features=audit_features(profile, scenario, tol=audit_tol, dispatch=dispatch),
        allocation=alloc,
        utilities=producer_utilities(profile, scenario, alloc),
        dispatch=dispatch,
    )


def _golden_max(
    f: Callable[[float], float], lo: float, hi: float, iters: int
) -> float:
    """Argmax of f on [lo, hi] by golden-section search (deterministic)."""
    if hi <= lo:
        return lo
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= 1e-12:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
