"""Solver, certificate, and enumeration-oracle tests for centralized dispatch."""

import random
from dataclasses import replace

import pytest

from elecpool import (
    CostFunction,
    DispatchError,
    InvalidScenarioError,
    KKTCertificate,
    OracleBudgetError,
    Producer,
    ProductionProfile,
    Scenario,
    brute_force_dispatch,
    kkt_residuals,
    price_ceiling,
    production_cost,
    solve_dispatch,
)
from _support import random_scenario


class TestSolveDispatch:
    def test_symmetric_equal_split(self, symmetric_scenario):
        result = solve_dispatch(symmetric_scenario)
        for q in result.profile.quantities:
            assert q == pytest.approx(1.0, abs=1e-9)
        assert result.certificate.price == pytest.approx(3.0, abs=1e-9)
        assert result.profile.total() == pytest.approx(4.0, abs=1e-9)
        assert result.residuals.worst <= 1e-8

    def test_zero_demand(self, symmetric_scenario):
        scenario = replace(symmetric_scenario, demand=0.0)
        result = solve_dispatch(scenario)
        assert result.profile.quantities == (0.0, 0.0, 0.0, 0.0)
        assert result.certificate.price == 0.0
        # every producer's entry marginal cost backs the zero production
        assert result.certificate.idle_margins == (1.0, 1.0, 1.0, 1.0)
        assert result.residuals.worst == 0.0

    def test_infeasible_demand_rejected_with_tag(self, symmetric_scenario):
        scenario = replace(symmetric_scenario, demand=9.0)
        with pytest.raises(InvalidScenarioError) as exc:
            solve_dispatch(scenario)
        assert any(issue.tag == "A7" for issue in exc.value.issues)

    def test_saturated_market_prices_at_ceiling(self, symmetric_scenario):
        scenario = replace(symmetric_scenario, demand=8.0)
        result = solve_dispatch(scenario)
        assert result.certificate.price == pytest.approx(5.0, abs=1e-6)
        for q in result.profile.quantities:
            assert q == pytest.approx(2.0, abs=1e-6)
        assert result.residuals.worst <= 1e-8

    def test_capacity_rent_recovery(self):
        # both producers capped; the cheaper one earns the price gap as rent
        scenario = Scenario(
            (
                Producer(1, 2.0, CostFunction((1.0, 1.0))),
                Producer(2, 2.0, CostFunction((2.0, 1.0))),
            ),
            demand=4.0,
            relax_min_producers=True,
        )
        result = solve_dispatch(scenario)
        assert result.certificate.price == pytest.approx(6.0, abs=1e-6)
        assert result.certificate.capacity_rents[0] == pytest.approx(1.0, abs=1e-6)
        assert result.certificate.capacity_rents[1] == pytest.approx(0.0, abs=1e-6)
        assert result.residuals.worst <= 1e-8

    def test_bracket_independence(self, mixed_scenario):
        a = solve_dispatch(mixed_scenario)
        b = solve_dispatch(mixed_scenario, bracket_hi=10.0 * price_ceiling(mixed_scenario))
        gap = max(
            abs(x - y) for x, y in zip(a.profile.quantities, b.profile.quantities)
        )
        assert gap <= 1e-6

    def test_monotone_in_demand(self):
        scenario = random_scenario(random.Random(11))
        demands = [f * scenario.total_capacity for f in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)]
        last_price = -1.0
        last_q = [0.0] * scenario.n
        for demand in demands:
            result = solve_dispatch(replace(scenario, demand=demand))
            assert result.certificate.price >= last_price - 1e-9
            for i, q in enumerate(result.profile.quantities):
                assert q >= last_q[i] - 1e-9
            last_price = result.certificate.price
            last_q = list(result.profile.quantities)

    def test_rejects_nonpositive_tol(self, symmetric_scenario):
        with pytest.raises(ValueError):
            solve_dispatch(symmetric_scenario, tol=0.0)


class TestFourProducerPool:
    """The bundled mixed-convexity pool, pinned against hand-derived brackets.

    Equal-marginal reasoning puts the clearing price strictly between 5.77 and
    5.78 (aggregate supply is 3.993 and 4.006 at those prices), with all four
    producers interior; the enumeration oracle confirms the cost level.
    """

    def test_certified_interior_optimum(self, mixed_scenario):
        result = solve_dispatch(mixed_scenario)
        assert result.profile.total() == pytest.approx(4.0, abs=1e-9)
        assert 5.77 < result.certificate.price < 5.78
        assert result.residuals.worst <= 1e-8
        e = result.profile.quantities
        assert 1.885 < e[0] < 1.890
        assert 0.9605 < e[1] < 0.9630
        assert 0.7615 < e[2] < 0.7640
        assert 0.385 < e[3] < 0.390
        assert 16.55 < result.total_cost < 16.65

    def test_beats_reference_dispatch(self, mixed_scenario):
        reference = (2.0, 1.12, 0.88, 0.0)
        reference_cost = production_cost(mixed_scenario, reference)
        assert reference_cost == pytest.approx(16.88462336, rel=1e-12)
        result = solve_dispatch(mixed_scenario)
        assert result.total_cost < reference_cost - 0.25

    def test_reference_dispatch_fails_first_order_check(self, mixed_scenario):
        # best-effort multipliers for the reference still violate the system:
        # producer 4 is idle although its entry marginal cost (5) sits below
        # the claimed price (6.5)
        profile = ProductionProfile((2.0, 1.12, 0.88, 0.0))
        certificate = KKTCertificate(
            price=6.5,
            capacity_rents=(0.5, 0.0, 0.0, 0.0),
            idle_margins=(0.0, 0.0, 0.0, 0.0),
            stationarity_residual=0.0,
            complementarity_residual=0.0,
            feasibility_residual=0.0,
        )
        residuals = kkt_residuals(mixed_scenario, profile, certificate)
        assert residuals.stationarity > 0.2

    def test_oracle_confirms_solver(self, mixed_scenario):
        oracle = brute_force_dispatch(mixed_scenario, step=0.005)
        oracle_cost = production_cost(mixed_scenario, oracle)
        solver_cost = solve_dispatch(mixed_scenario).total_cost
        worst_marginal = price_ceiling(mixed_scenario)
        assert solver_cost <= oracle_cost + 1e-9
        assert oracle_cost <= solver_cost + 4 * 0.005 * worst_marginal
        assert oracle_cost <= 16.8847  # at most the reference profile's cost


class TestKKTResiduals:
    def test_certified_solution_is_clean(self, symmetric_scenario):
        result = solve_dispatch(symmetric_scenario)
        report = kkt_residuals(symmetric_scenario, result.profile, result.certificate)
        assert report.worst <= 1e-8

    def test_hand_built_violation(self, symmetric_scenario):
        profile = ProductionProfile((2.0, 2.0, 0.0, 0.0))
        certificate = KKTCertificate(
            price=3.0,
            capacity_rents=(0.0,) * 4,
            idle_margins=(0.0,) * 4,
            stationarity_residual=0.0,
            complementarity_residual=0.0,
            feasibility_residual=0.0,
        )
        report = kkt_residuals(symmetric_scenario, profile, certificate)
        # C'(2) = 5 against the claimed price 3
        assert report.stationarity == 2.0
        assert report.complementarity == 0.0
        assert report.primal == 0.0

    def test_zero_demand_zero_profile(self, symmetric_scenario):
        scenario = replace(symmetric_scenario, demand=0.0)
        profile = ProductionProfile((0.0,) * 4)
        certificate = KKTCertificate(
            price=0.0,
            capacity_rents=(0.0,) * 4,
            idle_margins=(1.0,) * 4,
            stationarity_residual=0.0,
            complementarity_residual=0.0,
            feasibility_residual=0.0,
        )
        report = kkt_residuals(scenario, profile, certificate)
        assert report.worst == 0.0

    def test_negative_multiplier_reported_as_dual(self, symmetric_scenario):
        result = solve_dispatch(symmetric_scenario)
        bad = replace(result.certificate, idle_margins=(-0.5, 0.0, 0.0, 0.0))
        report = kkt_residuals(symmetric_scenario, result.profile, bad)
        assert report.dual == 0.5


class TestBruteForceOracle:
    def test_symmetric_grid_hits_equal_split(self, symmetric_scenario):
        profile = brute_force_dispatch(symmetric_scenario, step=0.01)
        for q in profile.quantities:
            assert q == pytest.approx(1.0, abs=1e-9)

    def test_single_producer_meets_demand(self):
        scenario = Scenario(
            (Producer(1, 2.0, CostFunction((1.0, 1.0))),),
            demand=1.5,
            relax_min_producers=True,
        )
        profile = brute_force_dispatch(scenario, step=0.01)
        assert profile.quantities[0] == pytest.approx(1.5, abs=1e-9)

    def test_zero_demand(self, symmetric_scenario):
        scenario = replace(symmetric_scenario, demand=0.0)
        assert brute_force_dispatch(scenario, step=0.1).quantities == (0.0,) * 4

    def test_lexicographic_tie_break(self):
        # with step 1 the only optimal grid profiles are (0, 1) and (1, 0)
        cost = CostFunction((1.0, 1.0))
        scenario = Scenario(
            (Producer(1, 1.0, cost), Producer(2, 1.0, cost)),
            demand=1.0,
            relax_min_producers=True,
        )
        profile = brute_force_dispatch(scenario, step=1.0)
        assert profile.quantities == (0.0, 1.0)

    def test_cell_budget_enforced(self, symmetric_scenario):
        with pytest.raises(OracleBudgetError):
            brute_force_dispatch(symmetric_scenario, step=0.01, cell_budget=10)

    def test_step_too_coarse_rejected(self):
        scenario = Scenario(
            (Producer(1, 0.4, CostFunction((1.0, 1.0))),),
            demand=0.4,
            relax_min_producers=True,
        )
        with pytest.raises(DispatchError):
            brute_force_dispatch(scenario, step=1.0)

    def test_randomized_agreement_with_solver(self):
        rng = random.Random(5)
        step = 0.01
        for _ in range(10):
            scenario = random_scenario(rng)
            solver_cost = solve_dispatch(scenario).total_cost
            oracle_cost = production_cost(
                scenario, brute_force_dispatch(scenario, step)
            )
            slack = scenario.n * step * price_ceiling(scenario)
            assert solver_cost <= oracle_cost + 1e-9
            assert oracle_cost <= solver_cost + slack

    def test_oracle_meets_demand(self):
        rng = random.Random(6)
        for _ in range(5):
            scenario = random_scenario(rng)
            profile = brute_force_dispatch(scenario, step=0.01)
            assert profile.total() >= scenario.demand - 1e-9
            for q, cap in zip(profile.quantities, scenario.capacities):
                assert -1e-12 <= q <= cap + 1e-12
