import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXAMPLE_CURVE, FIXTURE_3, random_symmetric_curve, random_two_client_game
from oracles import brute_utility
from freerider.accuracy import AccuracyTable, parametric_curve
from freerider.config import dumps_game, game_from_dict, loads_game
from freerider.errors import ConfigError, InstanceTooLargeError, ModelIncompleteError
from freerider.game import (
    GameSpec,
    Role,
    StrategyProfile,
    SubsetTable,
    SymmetricCurve,
    client_expected_utility,
    iter_partitions,
    participant_count_distribution,
    partition_weights,
    reward_table_from_accuracy,
    total_utility,
    utility_free,
    utility_participate,
)


def test_free_utility_against_pure_opponent():
    game = GameSpec.symmetric(EXAMPLE_CURVE, 0.2)
    assert utility_free(game, 0, [1.0]) == pytest.approx(0.5, abs=1e-12)


def test_free_utility_mixed_opponent():
    game = GameSpec.symmetric(EXAMPLE_CURVE, 0.2)
    assert utility_free(game, 0, [0.3]) == pytest.approx(0.3 * 0.5 + 0.7 * 0.8, abs=1e-12)


def test_single_client_uses_empty_partition():
    game = GameSpec.symmetric((0.4, 0.7), 0.1)
    assert utility_free(game, 0, []) == pytest.approx(0.4)
    assert utility_participate(game, 0, []) == pytest.approx(0.6)


def test_participate_utility():
    game = GameSpec.symmetric(EXAMPLE_CURVE, 0.1)
    assert utility_participate(game, 0, [0.0]) == pytest.approx(0.8, abs=1e-12)


def test_three_clients_participate_half():
    game = GameSpec.symmetric((0.5, 0.6, 0.8, 0.9), 0.1)
    expected = 0.25 * 0.6 + 0.5 * 0.8 + 0.25 * 0.9 - 0.1
    assert utility_participate(game, 0, [0.5, 0.5]) == pytest.approx(expected, abs=1e-12)


def test_full_profile_or_opponents_only():
    game = GameSpec.symmetric(FIXTURE_3, 0.1)
    assert utility_free(game, 1, [0.2, 0.9, 0.4]) == utility_free(game, 1, [0.2, 0.4])


@pytest.mark.parametrize("seed", range(20))
def test_matches_brute_force_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    curve = random_symmetric_curve(rng, n)
    costs = tuple(rng.uniform(0, 0.3, n))
    curve_game = GameSpec(n, costs, SymmetricCurve(curve))
    # arbitrary per-client subset rewards, not derived from any curve
    values = {}
    for i in range(n):
        for part in iter_partitions([j for j in range(n) if j != i]):
            for role in Role:
                values[(i, role, part.participants)] = float(rng.uniform())
    table_game = GameSpec(n, costs, SubsetTable(n, values))
    probs = rng.uniform(size=n)
    for game in (curve_game, table_game):
        for i in range(n):
            assert client_expected_utility(game, i, probs) == pytest.approx(brute_utility(game, i, probs), abs=1e-12)


def test_weights_sum_to_one():
    rng = np.random.default_rng(1)
    for m in range(0, 9):
        p = rng.uniform(size=m)
        assert partition_weights(p).sum() == pytest.approx(1.0, abs=1e-12)
        assert participant_count_distribution(p).sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0, 1))
def test_affine_in_own_probability(probs, t):
    game = GameSpec.symmetric(FIXTURE_3, 0.12)
    lo, hi, mid = list(probs), list(probs), list(probs)
    lo[0], hi[0], mid[0] = 0.0, 1.0, t
    expected = (1 - t) * client_expected_utility(game, 0, lo) + t * client_expected_utility(game, 0, hi)
    assert client_expected_utility(game, 0, mid) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_total_utility_is_multilinear(seed):
    rng = np.random.default_rng(seed)
    game = random_two_client_game(rng)
    p, q = rng.uniform(size=2)
    corners = {(a, b): total_utility(game, (a, b)) for a in (0.0, 1.0) for b in (0.0, 1.0)}
    bilinear = sum(
        (p if a else 1 - p) * (q if b else 1 - q) * corners[(a, b)] for a, b in itertools.product((0.0, 1.0), repeat=2)
    )
    assert total_utility(game, (p, q)) == pytest.approx(bilinear, abs=1e-12)


def test_symmetric_three_clients_eight_role_profiles():
    # shared rewards from one curve take A(k) with k the number of participants
    game = GameSpec.symmetric(FIXTURE_3, 0.0)
    seen = set()
    for roles in itertools.product((Role.FREE_RIDER, Role.PARTICIPANT), repeat=3):
        parts = [j for j in range(3) if roles[j] is Role.PARTICIPANT]
        rewards = tuple(game.rewards.reward(i, roles[i], [j for j in parts if j != i]) for i in range(3))
        assert len(set(rewards)) == 1
        assert rewards[0] == FIXTURE_3[len(parts)]
        seen.add(roles)
    assert len(seen) == 8


def test_by_subset_accuracy_gives_shared_rewards():
    entries = {mask: 0.5 + 0.1 * bin(mask).count("1") + 0.01 * mask for mask in range(8)}
    model = reward_table_from_accuracy(AccuracyTable("by_subset", 3, entries, {}, {}), 3)
    assert model.reward(0, Role.PARTICIPANT, {2}) == entries[0b101]
    assert model.reward(1, Role.FREE_RIDER, {0, 2}) == entries[0b101]


def test_incomplete_subset_table():
    values = {(0, Role.FREE_RIDER, frozenset()): 0.5}
    with pytest.raises(ModelIncompleteError):
        SubsetTable(2, values)


def test_short_curve_rejected():
    with pytest.raises(ModelIncompleteError):
        GameSpec(3, (0.1,) * 3, SymmetricCurve((0.5, 0.8, 0.9)))


def test_bad_inputs():
    with pytest.raises(ValueError):
        StrategyProfile((0.2, 1.5))
    with pytest.raises(ValueError):
        StrategyProfile((float("nan"),))
    with pytest.raises(ValueError):
        GameSpec.symmetric(EXAMPLE_CURVE, -0.1)
    with pytest.raises(ValueError):
        SymmetricCurve((0.5, 1.2))
    with pytest.raises(InstanceTooLargeError):
        SubsetTable(17, {})


def test_serialization_round_trip():
    game = GameSpec.symmetric(EXAMPLE_CURVE, 0.3)
    again = loads_game(dumps_game(game))
    assert again == game
    assert dumps_game(again) == dumps_game(game)

    rng = np.random.default_rng(3)
    values = {}
    for i in range(3):
        for part in iter_partitions([j for j in range(3) if j != i]):
            for role in Role:
                values[(i, role, part.participants)] = float(rng.uniform())
    table_game = GameSpec(3, (0.1, 0.2, 0.3), SubsetTable(3, values))
    again = loads_game(dumps_game(table_game))
    assert again.rewards.values == table_game.rewards.values
    assert dumps_game(again) == dumps_game(table_game)


def test_game_file_errors_carry_location():
    with pytest.raises(ConfigError) as err:
        loads_game('{"n_clients": 2,\n "cost": 0.1, "rewards": }', "g.json")
    assert err.value.location.startswith("g.json:2:")
    with pytest.raises(ConfigError) as err:
        game_from_dict({"n_clients": 2, "cost": 0.1, "rewards": {"kind": "symmetric"}})
    assert "curve" in str(err.value)
    with pytest.raises(ConfigError):
        game_from_dict({"n_clients": 2, "cost": 0.1, "rewards": {"kind": "symmetric", "curve": [0.5, 0.8]}})


def test_game_file_accuracy_table(tmp_path):
    parametric_curve(EXAMPLE_CURVE).save(tmp_path / "a.json")
    (tmp_path / "g.json").write_text('{"n_clients": 2, "cost": 0.3, "rewards": {"kind": "symmetric", "accuracy_table": "a.json"}}')
    from freerider.config import load_game

    assert load_game(tmp_path / "g.json") == GameSpec.symmetric(EXAMPLE_CURVE, 0.3)
