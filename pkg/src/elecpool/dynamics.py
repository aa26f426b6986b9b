"""Best-response iteration for equilibrium-discovery experiments.

No algorithm with guaranteed convergence is known for this game, so the runs
here produce evidence, not claims: trajectories, per-step distances to the
two known equilibria, and a verdict.  A run is only ever declared converged
when the endpoint sits at a known equilibrium and independently re-certifies
as an epsilon-equilibrium at ten times the convergence tolerance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .dispatch import price_ceiling, solve_dispatch
from .equilibrium import SearchConfig, best_response, trivial_equilibrium, verify_epsilon
from .mechanism import Message, MessageProfile, normalize_profile
from .scenario import Scenario

VERDICT_TRIVIAL = "converged-to-trivial"
VERDICT_NONTRIVIAL = "converged-to-nontrivial"
VERDICT_CYCLING = "cycling"
VERDICT_EXHAUSTED = "budget-of-iterations-exhausted"

SCHEDULES = ("sequential", "simultaneous")


@dataclass(frozen=True)
class Trajectory:
    """One dynamics run: the visited profiles and how it ended.

    steps[0] is the initial profile; each later entry is the profile after a
    full sweep.  distance_to_nontrivial is None when zero demand leaves no
    non-trivial equilibrium to measure against.
    """

    steps: tuple[MessageProfile, ...]
    verdict: str
    distance_to_trivial: tuple[float, ...]
    distance_to_nontrivial: tuple[float, ...] | None
    endpoint_epsilon: float
    schedule: str
    conv_tol: float


def run_best_response_dynamics(
    scenario: Scenario,
    init: MessageProfile,
    schedule: str = "sequential",
    max_iter: int = 100,
    conv_tol: float = 1e-8,
    search: SearchConfig = SearchConfig(),
    classify_tol: float = 1e-5,
) -> Trajectory:
    """Iterate best responses from an initial profile and classify the endpoint.

    sequential: producers revise one at a time in cyclic order within a sweep.
    simultaneous: all producers revise against the same previous profile.

    A sweep with drift at most conv_tol triggers classification; the run stops
    converged only if the endpoint is within classify_tol of a known
    equilibrium and verify_epsilon comes in at or below 10 * conv_tol.
    Otherwise iteration continues until a repeated profile (cycling) or the
    budget runs out.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    trivial = trivial_equilibrium(scenario)
    nontrivial = None
    if scenario.demand > 0.0:
        d = solve_dispatch(scenario)
        nontrivial = MessageProfile(
            tuple(Message(q, d.certificate.price) for q in d.profile.quantities)
        )

    current = normalize_profile(init, scenario)
    steps = [current]
    dist_trivial = [current.distance(trivial)]
    dist_nontrivial = [current.distance(nontrivial)] if nontrivial else None
    seen = {_round_key(current): 0}
    verdict = VERDICT_EXHAUSTED
    endpoint_epsilon = None

    for _ in range(max_iter):
        previous = steps[-1]
        current = _sweep(previous, scenario, schedule, search)
        steps.append(current)
        dist_trivial.append(current.distance(trivial))
        if dist_nontrivial is not None:
            dist_nontrivial.append(current.distance(nontrivial))

        if previous.distance(current) <= conv_tol:
            epsilon = verify_epsilon(current, scenario, search)
            if epsilon <= 10.0 * conv_tol:
                if current.distance(trivial) <= classify_tol:
                    verdict = VERDICT_TRIVIAL
                    endpoint_epsilon = epsilon
                    break
                if nontrivial is not None and current.distance(nontrivial) <= classify_tol:
                    verdict = VERDICT_NONTRIVIAL
                    endpoint_epsilon = epsilon
                    break
            # stalled but not at a certified known equilibrium: keep going

        key = _round_key(current)
        if key in seen and (len(steps) - 1) - seen[key] >= 2:
            verdict = VERDICT_CYCLING
            break
        seen[key] = len(steps) - 1

    if endpoint_epsilon is None:
        endpoint_epsilon = verify_epsilon(steps[-1], scenario, search)
    return Trajectory(
        steps=tuple(steps),
        verdict=verdict,
        distance_to_trivial=tuple(dist_trivial),
        distance_to_nontrivial=tuple(dist_nontrivial) if dist_nontrivial else None,
        endpoint_epsilon=endpoint_epsilon,
        schedule=schedule,
        conv_tol=conv_tol,
    )


def random_profile(scenario: Scenario, rng: random.Random) -> MessageProfile:
    """A uniformly random admissible profile, for seeded experiment starts."""
    scale = 1.5 * price_ceiling(scenario)
    return MessageProfile(
        tuple(
            Message(rng.uniform(0.0, p.capacity), rng.uniform(0.0, scale))
            for p in scenario.producers
        )
    )


def _sweep(
    profile: MessageProfile, scenario: Scenario, schedule: str, search: SearchConfig
) -> MessageProfile:
    n = scenario.n
    if schedule == "simultaneous":
        return MessageProfile(
            tuple(best_response(i, profile, scenario, search).message for i in range(n))
        )
    messages = list(profile.messages)
    for i in range(n):
        current = MessageProfile(tuple(messages))
        messages[i] = best_response(i, current, scenario, search).message
    return MessageProfile(tuple(messages))


def _round_key(profile: MessageProfile) -> tuple:
    return tuple(
        (round(m.quantity, 9), round(m.price, 9)) for m in profile.messages
    )
