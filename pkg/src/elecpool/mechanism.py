"""Game form of the pooling market: messages, allocations, taxes, welfare.

Each producer submits a message (proposed production, proposed unit price).
The operator schedules exactly the proposed production and transfers to
producer i

    t_i = p_{i+1} e_i - (p_i - p_{i+1})^2 - 2 p_i (D0 - sum_j e_j)^2

with the cyclic convention that producer N's successor is producer 1.  The
demand side pays the sum of the transfers, so money is conserved at every
message profile by construction, not only at equilibrium.  The first term
pays producer i at its successor's price, which removes any influence of a
producer's own price proposal on what it is paid; the second term punishes
price disagreement; the third charges for collective over- or
under-production.

The imbalance enters as the squared signed gap (D0 - sum e)^2, which is the
smooth quantity the best-response and audit code differentiates; the absolute
value |D0 - sum e| is only ever reported, never differentiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dispatch import production_cost
from .errors import MechanismError
from .scenario import ProductionProfile, Scenario

# Proposed productions this far above the capacity (or below zero) are float
# dust from file round-trips and get clamped; anything larger is an error.
QUANTITY_SLACK = 1e-12


@dataclass(frozen=True)
class Message:
    """One producer's proposal: production in MWh and unit price in $/MWh."""

    quantity: float
    price: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "quantity", float(self.quantity))
        object.__setattr__(self, "price", float(self.price))


@dataclass(frozen=True)
class MessageProfile:
    """The joint strategy: one message per producer, in producer order."""

    messages: tuple[Message, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))

    def __len__(self) -> int:
        return len(self.messages)

    @property
    def quantities(self) -> tuple[float, ...]:
        return tuple(m.quantity for m in self.messages)

    @property
    def prices(self) -> tuple[float, ...]:
        return tuple(m.price for m in self.messages)

    def total_quantity(self) -> float:
        return math.fsum(m.quantity for m in self.messages)

    def distance(self, other: "MessageProfile") -> float:
        """Max-norm distance over both message coordinates."""
        gaps = [
            max(abs(a.quantity - b.quantity), abs(a.price - b.price))
            for a, b in zip(self.messages, other.messages, strict=True)
        ]
        return max(gaps) if gaps else 0.0


@dataclass(frozen=True)
class Allocation:
    """What the outcome function hands out for one message profile.

    ``payments`` and ``penalties`` are the two transfer components
    (successor-price receipt and the combined punishment terms); their sums
    reassemble ``t`` exactly because each t_i is computed as their float sum.
    """

    e: tuple[float, ...]
    t: tuple[float, ...]
    payments: tuple[float, ...]
    penalties: tuple[float, ...]
    consumer_payment: float
    imbalance: float


@dataclass(frozen=True)
class BudgetLedger:
    """Itemized money flows for one allocation; the net is zero identically."""

    payments: tuple[float, ...]
    penalties: tuple[float, ...]
    transfers: tuple[float, ...]
    consumer_payment: float
    net: float

    def rows(self):
        for i, (receipt, penalty, transfer) in enumerate(
            zip(self.payments, self.penalties, self.transfers), start=1
        ):
            yield {
                "producer": i,
                "receipt": receipt,
                "penalty": penalty,
                "transfer": transfer,
            }


def normalize_profile(profile: MessageProfile, scenario: Scenario) -> MessageProfile:
    """Clamp float dust on the production bounds and reject real violations.

    Raises:
        MechanismError: wrong message count, non-finite coordinates, negative
            prices, or proposed production outside [0, capacity] by more than
            QUANTITY_SLACK.
    """
    if len(profile) != scenario.n:
        raise MechanismError(
            f"profile has {len(profile)} messages for {scenario.n} producers"
        )
    out = []
    changed = False
    for producer, message in zip(scenario.producers, profile.messages):
        q, p = message.quantity, message.price
        if not (math.isfinite(q) and math.isfinite(p)):
            raise MechanismError(f"producer {producer.id}: non-finite message {message}")
        if p < 0.0:
            raise MechanismError(f"producer {producer.id}: negative price {p!r}")
        if q < -QUANTITY_SLACK or q > producer.capacity + QUANTITY_SLACK:
            raise MechanismError(
                f"producer {producer.id}: proposed production {q!r} outside "
                f"[0, {producer.capacity}]"
            )
        clamped = min(max(q, 0.0), producer.capacity)
        if clamped != q:
            message = Message(clamped, p)
            changed = True
        out.append(message)
    return MessageProfile(tuple(out)) if changed else profile


def imbalance(profile: MessageProfile, demand: float) -> float:
    """Absolute gap between the demand and the total proposed production."""
    return abs(demand - profile.total_quantity())


def _tax_terms(
    price_i: float, price_next: float, quantity: float, gap_sq: float
) -> tuple[float, float]:
    """Receipt and penalty components of one producer's transfer."""
    receipt = price_next * quantity
    penalty = -((price_i - price_next) ** 2) - 2.0 * price_i * gap_sq
    return receipt, penalty


def outcome(profile: MessageProfile, scenario: Scenario) -> Allocation:
    """Apply the outcome function: schedule the proposals and settle transfers."""
    prof = normalize_profile(profile, scenario)
    msgs = prof.messages
    n = len(msgs)
    gap = scenario.demand - prof.total_quantity()
    gap_sq = gap * gap
    e, t, payments, penalties = [], [], [], []
    for i, m in enumerate(msgs):
        price_next = msgs[(i + 1) % n].price
        receipt, penalty = _tax_terms(m.price, price_next, m.quantity, gap_sq)
        e.append(m.quantity)
        payments.append(receipt)
        penalties.append(penalty)
        t.append(receipt + penalty)
    return Allocation(
        e=tuple(e),
        t=tuple(t),
        payments=tuple(payments),
        penalties=tuple(penalties),
        consumer_payment=math.fsum(t),
        imbalance=abs(gap),
    )


def producer_utilities(
    profile: MessageProfile, scenario: Scenario, allocation: Allocation | None = None
) -> tuple[float, ...]:
    """Each producer's utility -C_i(e_i) + t_i at the profile."""
    alloc = allocation if allocation is not None else outcome(profile, scenario)
    return tuple(
        -p.cost.value(q) + transfer
        for p, q, transfer in zip(scenario.producers, alloc.e, alloc.t, strict=True)
    )


def producer_utility(i: int, profile: MessageProfile, scenario: Scenario) -> float:
    """Utility of producer at 0-based position i."""
    return producer_utilities(profile, scenario)[i]


def consumer_utility(allocation: Allocation, scenario: Scenario) -> float:
    """Demand-side utility: the service constant minus the total payment."""
    return scenario.consumer_utility - allocation.consumer_payment


def social_welfare(production, scenario: Scenario) -> tuple[float, float]:
    """Welfare of a production plan, gross and net of the service constant.

    Accepts a MessageProfile, a ProductionProfile, or a plain sequence.
    Returns (w1, w2) with w2 = -total production cost and w1 = w2 plus the
    consumer utility constant; w1 == w2 + constant holds exactly.
    """
    if isinstance(production, MessageProfile):
        quantities = production.quantities
    elif isinstance(production, ProductionProfile):
        quantities = production.quantities
    else:
        quantities = tuple(float(q) for q in production)
    w2 = -production_cost(scenario, quantities)
    return w2 + scenario.consumer_utility, w2


def budget_ledger(allocation: Allocation) -> BudgetLedger:
    """Itemize an allocation's money flows.

    The net line is consumer payment minus the sum of transfers; since the
    consumer payment is defined as that same float sum, the net is exactly
    0.0 at every profile.
    """
    return BudgetLedger(
        payments=allocation.payments,
        penalties=allocation.penalties,
        transfers=allocation.t,
        consumer_payment=allocation.consumer_payment,
        net=allocation.consumer_payment - math.fsum(allocation.t),
    )
