import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from freerider.accuracy import AccuracyTable  # noqa: E402
from freerider.game import GameSpec, reward_table_from_accuracy  # noqa: E402

EXAMPLE_CURVE = (0.5, 0.8, 0.9)
FIXTURE_3 = (0.5, 0.7, 0.85, 0.9)


@pytest.fixture
def example_game():
    def make(cost):
        return GameSpec.symmetric(EXAMPLE_CURVE, cost)

    return make


def random_two_client_game(rng):
    """Monotone shared-accuracy game, either by count or by subset, with unequal costs."""
    a0 = rng.uniform(0.3, 0.6)
    a1, a2 = a0 + rng.uniform(0.0, 0.4, 2)
    a12 = max(a1, a2) + rng.uniform(0.0, 0.3)
    vals = np.clip([a0, a1, a2, a12], 0.0, 1.0)
    costs = tuple(rng.uniform(0.0, 0.4, 2))
    if rng.random() < 0.5:
        table = AccuracyTable("by_subset", 2, dict(enumerate(vals)), {}, {})
        return GameSpec(2, costs, reward_table_from_accuracy(table, 2))
    return GameSpec.symmetric(sorted(vals[[0, 1, 3]]), 0.0).with_costs(costs)


def random_symmetric_curve(rng, n):
    steps = rng.uniform(0.0, 1.0, n)
    a0 = rng.uniform(0.3, 0.55)
    span = rng.uniform(0.2, 1.0 - a0)
    return tuple(a0 + span * np.cumsum(np.concatenate(([0.0], steps))) / steps.sum())


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
