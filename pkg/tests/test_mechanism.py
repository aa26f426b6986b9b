"""Outcome function, transfers, welfare, and budget ledger tests."""

import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from elecpool import (
    Message,
    MessageProfile,
    MechanismError,
    budget_ledger,
    consumer_utility,
    imbalance,
    normalize_profile,
    outcome,
    producer_utilities,
    producer_utility,
    social_welfare,
)
from _support import random_messages, random_scenario


def messages(pairs) -> MessageProfile:
    return MessageProfile(tuple(Message(q, p) for q, p in pairs))


class TestImbalance:
    def test_balanced(self):
        assert imbalance(messages([(1, 0)] * 4), 4.0) == 0.0

    def test_underproduction(self):
        assert imbalance(messages([(1, 0)] * 3 + [(0, 0)]), 4.0) == 1.0

    def test_overproduction_penalized_symmetrically(self):
        assert imbalance(messages([(2, 0)] * 4), 4.0) == 4.0


class TestOutcome:
    def test_uniform_messages(self, symmetric_scenario):
        alloc = outcome(messages([(1.0, 2.0)] * 4), symmetric_scenario)
        assert alloc.e == (1.0, 1.0, 1.0, 1.0)
        assert alloc.t == (2.0, 2.0, 2.0, 2.0)
        assert alloc.consumer_payment == 8.0
        assert alloc.imbalance == 0.0

    def test_unbalanced_mixed_prices(self, symmetric_scenario):
        # imbalance 1; transfers evaluate exactly on integer inputs
        alloc = outcome(
            messages([(1, 2.0), (1, 3.0), (1, 2.0), (0, 3.0)]), symmetric_scenario
        )
        assert alloc.imbalance == 1.0
        assert alloc.t == (-2.0, -5.0, -2.0, -7.0)
        assert alloc.consumer_payment == -16.0

    def test_all_zero_messages(self, symmetric_scenario):
        alloc = outcome(messages([(0.0, 0.0)] * 4), symmetric_scenario)
        assert alloc.t == (0.0, 0.0, 0.0, 0.0)
        assert alloc.consumer_payment == 0.0

    def test_quantity_dust_clamped(self, symmetric_scenario):
        alloc = outcome(
            messages([(2.0 + 1e-13, 1.0)] + [(1.0, 1.0)] * 3), symmetric_scenario
        )
        assert alloc.e[0] == 2.0

    def test_real_violations_rejected(self, symmetric_scenario):
        with pytest.raises(MechanismError):
            outcome(messages([(2.0 + 1e-6, 1.0)] + [(1.0, 1.0)] * 3), symmetric_scenario)
        with pytest.raises(MechanismError):
            outcome(messages([(1.0, -0.5)] + [(1.0, 1.0)] * 3), symmetric_scenario)
        with pytest.raises(MechanismError):
            outcome(messages([(1.0, 1.0)] * 3), symmetric_scenario)

    def test_normalize_keeps_admissible_profile_identical(self, symmetric_scenario):
        profile = messages([(1.0, 2.0)] * 4)
        assert normalize_profile(profile, symmetric_scenario) is profile


class TestUtilities:
    def test_symmetric_at_common_price(self, symmetric_scenario):
        us = producer_utilities(messages([(1.0, 3.0)] * 4), symmetric_scenario)
        assert us == (1.0, 1.0, 1.0, 1.0)

    def test_trivial_profile_gives_zero(self, symmetric_scenario):
        us = producer_utilities(messages([(0.0, 0.0)] * 4), symmetric_scenario)
        assert us == (0.0, 0.0, 0.0, 0.0)

    def test_composed_example(self, symmetric_scenario):
        profile = messages([(1, 2.0), (1, 3.0), (1, 2.0), (0, 3.0)])
        assert producer_utility(0, profile, symmetric_scenario) == -4.0

    def test_consumer_side(self, symmetric_scenario):
        alloc = outcome(messages([(1.0, 2.0)] * 4), symmetric_scenario)
        assert consumer_utility(alloc, symmetric_scenario) == 92.0
        zero_value = replace(symmetric_scenario, consumer_utility=0.0)
        penal = outcome(
            messages([(1, 2.0), (1, 3.0), (1, 2.0), (0, 3.0)]), zero_value
        )
        # producers pay net penalties, so the demand side receives money
        assert consumer_utility(penal, zero_value) == 16.0

    def test_trivial_consumer_keeps_service_constant(self, symmetric_scenario):
        alloc = outcome(messages([(0.0, 0.0)] * 4), symmetric_scenario)
        assert consumer_utility(alloc, symmetric_scenario) == 100.0


class TestSocialWelfare:
    def test_symmetric_profile(self, symmetric_scenario):
        w1, w2 = social_welfare((1.0, 1.0, 1.0, 1.0), symmetric_scenario)
        assert w2 == -8.0
        assert w1 == 92.0

    def test_zero_production(self, symmetric_scenario):
        w1, w2 = social_welfare((0.0,) * 4, symmetric_scenario)
        assert w2 == 0.0
        assert w1 == 100.0

    def test_reference_profile_cost(self, mixed_scenario):
        _, w2 = social_welfare((2.0, 1.12, 0.88, 0.0), mixed_scenario)
        assert w2 == pytest.approx(-16.88462336, rel=1e-12)

    def test_accepts_message_profile(self, symmetric_scenario):
        w1, w2 = social_welfare(messages([(1.0, 7.0)] * 4), symmetric_scenario)
        assert (w1, w2) == (92.0, -8.0)


class TestBudgetLedger:
    def test_net_is_exactly_zero_on_examples(self, symmetric_scenario):
        for pairs in (
            [(1.0, 2.0)] * 4,
            [(1, 2.0), (1, 3.0), (1, 2.0), (0, 3.0)],
            [(0.0, 0.0)] * 4,
        ):
            ledger = budget_ledger(outcome(messages(pairs), symmetric_scenario))
            assert ledger.net == 0.0

    def test_randomized_profiles_balance_bitwise(self):
        rng = random.Random(17)
        for _ in range(10):
            scenario = random_scenario(rng)
            for _ in range(100):
                alloc = outcome(random_messages(rng, scenario), scenario)
                assert alloc.consumer_payment == math.fsum(alloc.t)
                assert budget_ledger(alloc).net == 0.0

    def test_transfer_decomposition_reassembles_exactly(self):
        rng = random.Random(23)
        scenario = random_scenario(rng)
        alloc = outcome(random_messages(rng, scenario), scenario)
        for t, receipt, penalty in zip(alloc.t, alloc.payments, alloc.penalties):
            assert t == receipt + penalty

    def test_price_taking_receipt_independent_of_own_price(self, symmetric_scenario):
        profile = messages([(1.0, 2.0), (0.7, 3.0), (1.5, 2.5), (0.8, 4.0)])
        base = outcome(profile, symmetric_scenario)
        for i in range(4):
            bumped = list(profile.messages)
            bumped[i] = Message(bumped[i].quantity, bumped[i].price + 1.7)
            alloc = outcome(MessageProfile(tuple(bumped)), symmetric_scenario)
            assert alloc.payments[i] == base.payments[i]

    def test_imbalance_independent_of_prices(self, symmetric_scenario):
        profile = messages([(1.0, 2.0), (0.7, 3.0), (1.5, 2.5), (0.8, 4.0)])
        repriced = messages([(1.0, 9.0), (0.7, 0.0), (1.5, 1.0), (0.8, 8.0)])
        a = outcome(profile, symmetric_scenario)
        b = outcome(repriced, symmetric_scenario)
        assert a.imbalance == b.imbalance

    def test_equal_prices_balanced_supply_gives_linear_taxes(self, symmetric_scenario):
        # dyadic quantities sum exactly to the demand, so both penalty terms
        # vanish in floating point and t_i == p * e_i holds bitwise
        quantities = (0.5, 1.25, 1.5, 0.75)
        price = 2.5
        alloc = outcome(messages([(q, price) for q in quantities]), symmetric_scenario)
        assert alloc.imbalance == 0.0
        for t, q in zip(alloc.t, quantities):
            assert t == price * q

    @given(seed=st.integers(0, 10_000))
    def test_budget_identity_property(self, seed):
        rng = random.Random(seed)
        scenario = random_scenario(rng)
        alloc = outcome(random_messages(rng, scenario), scenario)
        assert budget_ledger(alloc).net == 0.0
