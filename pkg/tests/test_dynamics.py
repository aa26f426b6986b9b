"""Best-response dynamics: fixed points, verdicts, certification guard."""

import random

import pytest

from elecpool import (
    construct_equilibrium,
    random_profile,
    run_best_response_dynamics,
    trivial_equilibrium,
    verify_epsilon,
)
from elecpool.dynamics import (
    VERDICT_CYCLING,
    VERDICT_EXHAUSTED,
    VERDICT_NONTRIVIAL,
    VERDICT_TRIVIAL,
)
from _support import random_scenario


class TestFixedPoints:
    def test_nontrivial_equilibrium(self, symmetric_scenario):
        init = construct_equilibrium(symmetric_scenario).profile
        trajectory = run_best_response_dynamics(symmetric_scenario, init, max_iter=3)
        assert trajectory.verdict == VERDICT_NONTRIVIAL
        assert len(trajectory.steps) == 2  # converged after one sweep
        assert trajectory.steps[0].distance(trajectory.steps[1]) <= 1e-8

    def test_trivial_equilibrium(self, symmetric_scenario):
        init = trivial_equilibrium(symmetric_scenario)
        trajectory = run_best_response_dynamics(symmetric_scenario, init, max_iter=3)
        assert trajectory.verdict == VERDICT_TRIVIAL
        assert len(trajectory.steps) == 2
        assert trajectory.steps[0].distance(trajectory.steps[1]) <= 1e-8

    def test_simultaneous_schedule_shares_the_fixed_points(self, symmetric_scenario):
        init = construct_equilibrium(symmetric_scenario).profile
        trajectory = run_best_response_dynamics(
            symmetric_scenario, init, schedule="simultaneous", max_iter=3
        )
        assert trajectory.verdict == VERDICT_NONTRIVIAL
        assert trajectory.steps[0].distance(trajectory.steps[1]) <= 1e-8


class TestTrajectoryBookkeeping:
    def test_distance_series_lengths(self, symmetric_scenario):
        init = trivial_equilibrium(symmetric_scenario)
        trajectory = run_best_response_dynamics(symmetric_scenario, init, max_iter=4)
        assert len(trajectory.distance_to_trivial) == len(trajectory.steps)
        assert len(trajectory.distance_to_nontrivial) == len(trajectory.steps)
        assert trajectory.distance_to_trivial[-1] <= 1e-12

    def test_invalid_arguments(self, symmetric_scenario):
        init = trivial_equilibrium(symmetric_scenario)
        with pytest.raises(ValueError):
            run_best_response_dynamics(symmetric_scenario, init, schedule="other")
        with pytest.raises(ValueError):
            run_best_response_dynamics(symmetric_scenario, init, max_iter=0)


class TestRandomStarts:
    def test_verdicts_are_recorded_not_asserted(self, symmetric_scenario):
        # outcomes from arbitrary starts are data; the hard requirement is
        # only that a converged verdict implies an independently certified
        # endpoint at the matching equilibrium
        known = {
            VERDICT_TRIVIAL: trivial_equilibrium(symmetric_scenario),
            VERDICT_NONTRIVIAL: construct_equilibrium(symmetric_scenario).profile,
        }
        for seed in (1, 2, 3):
            init = random_profile(symmetric_scenario, random.Random(seed))
            for schedule in ("sequential", "simultaneous"):
                trajectory = run_best_response_dynamics(
                    symmetric_scenario, init, schedule=schedule, max_iter=8
                )
                assert trajectory.verdict in (
                    VERDICT_TRIVIAL,
                    VERDICT_NONTRIVIAL,
                    VERDICT_CYCLING,
                    VERDICT_EXHAUSTED,
                )
                if trajectory.verdict in known:
                    endpoint = trajectory.steps[-1]
                    assert endpoint.distance(known[trajectory.verdict]) <= 1e-5
                    epsilon = verify_epsilon(endpoint, symmetric_scenario)
                    assert epsilon <= 10.0 * trajectory.conv_tol

    def test_never_converged_without_certification(self):
        rng = random.Random(113)
        scenario = random_scenario(rng)
        init = random_profile(scenario, rng)
        trajectory = run_best_response_dynamics(scenario, init, max_iter=6)
        if trajectory.verdict in (VERDICT_TRIVIAL, VERDICT_NONTRIVIAL):
            assert trajectory.endpoint_epsilon <= 10.0 * trajectory.conv_tol
