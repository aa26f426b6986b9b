import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

import pytest

from elecpool import CostFunction, Producer, Scenario

FIXTURES = ROOT / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def symmetric_scenario() -> Scenario:
    """Four identical producers, cost e + e^2, capacity 2, demand 4."""
    cost = CostFunction((1.0, 1.0))
    return Scenario(
        tuple(Producer(i + 1, 2.0, cost) for i in range(4)),
        demand=4.0,
        consumer_utility=100.0,
    )


@pytest.fixture
def mixed_scenario() -> Scenario:
    """Four producers mixing quadratic, cubic, and quartic convexity."""
    return Scenario(
        (
            Producer(1, 2.0, CostFunction((2.0, 1.0))),
            Producer(2, 2.0, CostFunction((3.0, 0.0, 1.0))),
            Producer(3, 2.0, CostFunction((4.0, 0.0, 0.0, 1.0))),
            Producer(4, 2.0, CostFunction((5.0, 1.0))),
        ),
        demand=4.0,
        consumer_utility=100.0,
    )
