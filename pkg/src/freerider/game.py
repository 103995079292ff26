"""Game instances and exact expected-utility evaluation.

A client's expected reward is an average over every way its opponents can
split into free-riders and participants, each split weighted by the
probability the opponents' strategies assign to it.  Two reward models are
supported: a per-client subset table (evaluated by full enumeration) and a
shared accuracy curve indexed by the number of participants (evaluated with
an O(N^2) participant-count distribution).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import InstanceTooLargeError, ModelIncompleteError

# 2^(N-1) partitions per evaluation with a subset table
MAX_SUBSET_CLIENTS = 16


class Role(enum.Enum):
    FREE_RIDER = "F"
    PARTICIPANT = "P"

    @classmethod
    def parse(cls, value) -> "Role":
        if isinstance(value, Role):
            return value
        text = str(value).strip().upper()
        for role in cls:
            if text in (role.value, role.name, role.name.replace("_", "")):
                return role
        raise ValueError(f"unknown role {value!r}")


def _check_reward(value, where) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"reward {value!r} at {where} is outside [0, 1]")
    return value


@dataclass(frozen=True)
class SymmetricCurve:
    """Shared rewards from one accuracy curve A(0..N).

    A free-rider facing participant set P earns A(|P|); a participant earns
    A(|P| + 1).
    """

    accuracy: tuple

    def __post_init__(self):
        acc = tuple(_check_reward(a, f"A({k})") for k, a in enumerate(self.accuracy))
        if not acc:
            raise ModelIncompleteError("accuracy curve needs at least A(0)")
        object.__setattr__(self, "accuracy", acc)

    @property
    def max_clients(self) -> int:
        return len(self.accuracy) - 1

    def reward(self, i: int, role: Role, participants) -> float:
        k = len(participants) + (role is Role.PARTICIPANT)
        if k >= len(self.accuracy):
            raise ModelIncompleteError(f"accuracy curve has no entry for {k} participants")
        return self.accuracy[k]


@dataclass(frozen=True)
class SubsetTable:
    """Arbitrary per-client rewards keyed by (client, role, participating opponents)."""

    n_clients: int
    values: Mapping = field(repr=False)

    def __post_init__(self):
        n = int(self.n_clients)
        if n < 1:
            raise ValueError("n_clients must be positive")
        if n > MAX_SUBSET_CLIENTS:
            raise InstanceTooLargeError(
                f"subset tables are limited to N <= {MAX_SUBSET_CLIENTS}; "
                "use a symmetric accuracy curve for larger games"
            )
        values = {}
        for (i, role, participants), v in dict(self.values).items():
            key = (int(i), Role.parse(role), frozenset(int(j) for j in participants))
            values[key] = _check_reward(v, key)
        object.__setattr__(self, "n_clients", n)
        object.__setattr__(self, "values", values)

        # dense per-client arrays indexed by a bitmask over the sorted opponents
        arrays = []
        for i in range(n):
            opponents = [j for j in range(n) if j != i]
            m = len(opponents)
            free = np.empty(1 << m)
            part = np.empty(1 << m)
            for mask in range(1 << m):
                pset = frozenset(opponents[b] for b in range(m) if mask >> b & 1)
                for role, out in ((Role.FREE_RIDER, free), (Role.PARTICIPANT, part)):
                    try:
                        out[mask] = values[(i, role, pset)]
                    except KeyError:
                        raise ModelIncompleteError(
                            f"no reward for client {i}, role {role.value}, "
                            f"participants {sorted(pset)}"
                        ) from None
            arrays.append((free, part))
        object.__setattr__(self, "_arrays", tuple(arrays))

    def reward(self, i: int, role: Role, participants) -> float:
        try:
            return self.values[(i, role, frozenset(participants))]
        except KeyError:
            raise ModelIncompleteError(
                f"no reward for client {i}, role {role.value}, participants {sorted(participants)}"
            ) from None

    def dense(self, i: int):
        """(free_rewards, participant_rewards) arrays indexed by opponent bitmask."""
        return self._arrays[i]


RewardModel = Union[SymmetricCurve, SubsetTable]


@dataclass(frozen=True)
class StrategyProfile:
    """Free-riding probabilities, one per client."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        for p in probs:
            if not (0.0 <= p <= 1.0):  # also rejects NaN
                raise ValueError(f"probability {p!r} outside [0, 1]")
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def replace(self, i: int, value: float) -> "StrategyProfile":
        probs = list(self.probs)
        probs[i] = value
        return StrategyProfile(probs)

    @classmethod
    def uniform(cls, n: int, p: float) -> "StrategyProfile":
        return cls((p,) * n)


@dataclass(frozen=True)
class GameSpec:
    n_clients: int
    costs: tuple
    rewards: RewardModel

    def __post_init__(self):
        n = int(self.n_clients)
        if n < 1:
            raise ValueError("n_clients must be positive")
        costs = tuple(float(c) for c in self.costs)
        if len(costs) != n:
            raise ValueError(f"expected {n} costs, got {len(costs)}")
        if any(not (c >= 0.0) or math.isinf(c) for c in costs):
            raise ValueError("costs must be finite and nonnegative")
        if isinstance(self.rewards, SymmetricCurve):
            if self.rewards.max_clients < n:
                raise ModelIncompleteError(
                    f"accuracy curve covers {self.rewards.max_clients} participants, game has {n}"
                )
        elif isinstance(self.rewards, SubsetTable):
            if self.rewards.n_clients != n:
                raise ModelIncompleteError(
                    f"subset table is for {self.rewards.n_clients} clients, game has {n}"
                )
        else:
            raise TypeError(f"unsupported reward model {type(self.rewards).__name__}")
        object.__setattr__(self, "n_clients", n)
        object.__setattr__(self, "costs", costs)

    @property
    def is_symmetric(self) -> bool:
        """Curve rewards and a common cost."""
        return isinstance(self.rewards, SymmetricCurve) and len(set(self.costs)) == 1

    @classmethod
    def symmetric(cls, accuracy: Sequence[float], cost: float, n_clients: int | None = None):
        if n_clients is None:
            n_clients = len(accuracy) - 1
        return cls(n_clients, (cost,) * n_clients, SymmetricCurve(tuple(accuracy[: n_clients + 1])))

    def with_costs(self, costs) -> "GameSpec":
        if np.isscalar(costs):
            costs = (costs,) * self.n_clients
        return GameSpec(self.n_clients, tuple(costs), self.rewards)


@dataclass(frozen=True)
class Partition:
    free_riders: frozenset
    participants: frozenset


def iter_partitions(opponents: Sequence[int]) -> Iterator[Partition]:
    """Every split of ``opponents`` into free-riders and participants."""
    opponents = list(opponents)
    for roles in itertools.product((Role.FREE_RIDER, Role.PARTICIPANT), repeat=len(opponents)):
        free = frozenset(j for j, r in zip(opponents, roles) if r is Role.FREE_RIDER)
        yield Partition(free, frozenset(opponents) - free)


def opponents_of(game: GameSpec, i: int) -> list:
    return opponents_of_n(game.n_clients, i)


def _opponent_probs(n: int, i: int, p_others) -> np.ndarray:
    # accepts the N-1 opponent probabilities (ascending client order) or a full profile
    if not 0 <= i < n:
        raise IndexError(f"client {i} not in game of {n}")
    probs = np.asarray(tuple(p_others), dtype=float)
    if probs.shape == (n,):
        probs = np.delete(probs, i)
    elif probs.shape != (n - 1,):
        raise ValueError(f"expected {n - 1} opponent probabilities or a full profile, got {probs.size}")
    if not np.all((probs >= 0.0) & (probs <= 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return probs


def partition_weights(free_probs: np.ndarray) -> np.ndarray:
    """Probability of each opponent split; bit b of the index set means opponent b participates."""
    weights = np.ones(1)
    for p in free_probs:
        weights = np.concatenate((weights * p, weights * (1.0 - p)))
    return weights


def participant_count_distribution(free_probs: np.ndarray) -> np.ndarray:
    """P(k opponents participate), k = 0..m, for independent opponents."""
    dist = np.zeros(len(free_probs) + 1)
    dist[0] = 1.0
    for m, p in enumerate(free_probs, start=1):
        # in-place shift, highest index first
        dist[1 : m + 1] = dist[1 : m + 1] * p + dist[0:m] * (1.0 - p)
        dist[0] *= p
    return dist


def expected_rewards(game: GameSpec, i: int, p_others) -> tuple:
    """(E[reward | free-ride], E[reward | participate]) for client i, costs excluded."""
    return model_expected_rewards(game.rewards, game.n_clients, i, p_others)


def model_expected_rewards(rewards: RewardModel, n_clients: int, i: int, p_others) -> tuple:
    """Same as :func:`expected_rewards` but reading only the reward model."""
    probs = _opponent_probs(n_clients, i, p_others)
    if isinstance(rewards, SymmetricCurve):
        dist = participant_count_distribution(probs)
        acc = np.asarray(rewards.accuracy)
        m = len(probs)
        return float(dist @ acc[: m + 1]), float(dist @ acc[1 : m + 2])
    if n_clients > MAX_SUBSET_CLIENTS:
        raise InstanceTooLargeError(f"subset enumeration is limited to N <= {MAX_SUBSET_CLIENTS}")
    weights = partition_weights(probs)
    free, part = rewards.dense(i)
    return float(weights @ free), float(weights @ part)


def utility_free(game: GameSpec, i: int, p_others) -> float:
    return expected_rewards(game, i, p_others)[0]


def utility_participate(game: GameSpec, i: int, p_others) -> float:
    return expected_rewards(game, i, p_others)[1] - game.costs[i]


def _as_profile(game: GameSpec, profile) -> StrategyProfile:
    if not isinstance(profile, StrategyProfile):
        profile = StrategyProfile(tuple(profile))
    if len(profile) != game.n_clients:
        raise ValueError(f"profile has {len(profile)} entries, game has {game.n_clients} clients")
    return profile


def client_expected_utility(game: GameSpec, i: int, profile) -> float:
    """Client i's utility averaged over its own mixed strategy."""
    profile = _as_profile(game, profile)
    e_free, e_part = expected_rewards(game, i, profile.probs)
    p = profile[i]
    return p * e_free + (1.0 - p) * (e_part - game.costs[i])


def total_utility(game: GameSpec, profile) -> float:
    profile = _as_profile(game, profile)
    return sum(client_expected_utility(game, i, profile) for i in range(game.n_clients))


def reward_table_from_accuracy(accuracy, n_clients: int) -> RewardModel:
    """Turn a global-accuracy table into game rewards.

    Rewards depend only on who participates: a free-rider facing participant
    set P earns accuracy(P), a participant earns accuracy(P + {i}).
    """
    if accuracy.mode == "by_count":
        try:
            curve = tuple(accuracy.entries[k] for k in range(n_clients + 1))
        except KeyError as exc:
            raise ModelIncompleteError(f"accuracy table has no entry for {exc.args[0]} participants") from None
        return SymmetricCurve(curve)

    if accuracy.mode != "by_subset":
        raise ValueError(f"unknown accuracy mode {accuracy.mode!r}")
    values = {}
    for i in range(n_clients):
        for part in iter_partitions(opponents_of_n(n_clients, i)):
            for role, pset in (
                (Role.FREE_RIDER, part.participants),
                (Role.PARTICIPANT, part.participants | {i}),
            ):
                key = subset_mask(pset)
                if key not in accuracy.entries:
                    raise ModelIncompleteError(f"accuracy table has no entry for participants {sorted(pset)}")
                values[(i, role, part.participants)] = accuracy.entries[key]
    return SubsetTable(n_clients, values)


def opponents_of_n(n: int, i: int) -> list:
    return [j for j in range(n) if j != i]


def subset_mask(clients) -> int:
    """Bitmask with bit j set for every client j in ``clients``."""
    mask = 0
    for j in clients:
        mask |= 1 << j
    return mask
