"""Fictitious play for the free-rider game.

Each round every client best-responds to the empirical free-riding
frequencies of its opponents, computed from the broadcast participation
lists.  A client only ever evaluates its own rewards and cost.

Beliefs start from one phantom observation at ``initial_belief``:

    belief_i(t) = (w * initial_belief + #free-rides of i in rounds 1..t) / (w + t)

with pseudo-count ``w = 1``.  Ties (exact indifference) are broken with one
shared uniform draw per round, compared against each client's mixing
probability; clients with equal mixing probabilities therefore break ties
the same way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .accuracy import config_hash
from .equilibrium import (
    TIE_TOL,
    Verification,
    make_result,
    mixing_probabilities,
    symmetric_equilibria,
    verify_equilibrium,
)
from .game import GameSpec, RewardModel, Role, model_expected_rewards

FREE, PARTICIPATE = 1, 0


@dataclass(frozen=True)
class ClientView:
    """What client i knows: its own index, cost and rewards."""

    index: int
    n_clients: int
    cost: float
    rewards: RewardModel

    def advantage(self, opponent_beliefs) -> float:
        e_free, e_part = model_expected_rewards(self.rewards, self.n_clients, self.index, opponent_beliefs)
        return e_part - e_free - self.cost

    def respond(self, opponent_beliefs, draw: float, tie_prob: float, tol: float = TIE_TOL) -> int:
        adv = self.advantage(opponent_beliefs)
        if adv > tol:
            return PARTICIPATE
        if adv < -tol:
            return FREE
        return FREE if draw < tie_prob else PARTICIPATE


def client_views(game: GameSpec) -> list:
    return [ClientView(i, game.n_clients, game.costs[i], game.rewards) for i in range(game.n_clients)]


@dataclass(frozen=True)
class FictitiousPlayState:
    round: int
    actions: np.ndarray  # (round, N), 1 = free-ride
    beliefs: tuple
    initial_belief: float = 0.5
    prior_weight: float = 1.0

    @classmethod
    def start(cls, n_clients: int, initial_belief: float = 0.5, prior_weight: float = 1.0):
        actions = np.zeros((0, n_clients), dtype=np.int8)
        actions.setflags(write=False)
        return cls(0, actions, (float(initial_belief),) * n_clients, initial_belief, prior_weight)

    def roles(self, t: int) -> tuple:
        """Roles played in round t (1-based)."""
        return tuple(Role.FREE_RIDER if a == FREE else Role.PARTICIPANT for a in self.actions[t - 1])

    def recomputed_beliefs(self) -> tuple:
        counts = self.actions.sum(axis=0)
        w = self.prior_weight
        return tuple(float(b) for b in (w * self.initial_belief + counts) / (w + self.round))


def tie_probabilities(game: GameSpec) -> tuple:
    """Free-riding probability each client uses when exactly indifferent.

    Taken from the game's interior mixed equilibrium where one exists,
    otherwise a fair coin.
    """
    n = game.n_clients
    if n == 2:
        p_mix = mixing_probabilities(game)
        if None not in p_mix and make_result(game, p_mix).kkt_residual <= TIE_TOL:
            return tuple(p_mix)
    elif game.is_symmetric:
        for eq in symmetric_equilibria(game):
            if 0.0 < eq.profile[0] < 1.0:
                return eq.profile.probs
    return (0.5,) * n


def _choose_actions(views, beliefs, draw, tie_probs):
    beliefs = tuple(beliefs)
    return [
        v.respond(beliefs[: v.index] + beliefs[v.index + 1 :], draw, tie_probs[v.index]) for v in views
    ]


def _updated_beliefs(beliefs, actions, t, prior_weight):
    # running average over the prior pseudo-count and t observed rounds
    return tuple(b + (a - b) / (prior_weight + t) for b, a in zip(beliefs, actions))


def fp_step(game: GameSpec, state: FictitiousPlayState, rng: np.random.Generator, tie_probs=None):
    """Play one simultaneous round and return the new state."""
    if tie_probs is None:
        tie_probs = (0.5,) * game.n_clients
    draw = float(rng.random())
    actions = _choose_actions(client_views(game), state.beliefs, draw, tie_probs)
    t = state.round + 1
    history = np.vstack([state.actions, np.asarray(actions, dtype=np.int8)[None, :]])
    history.setflags(write=False)
    beliefs = _updated_beliefs(state.beliefs, actions, t, state.prior_weight)
    return FictitiousPlayState(t, history, beliefs, state.initial_belief, state.prior_weight)


@dataclass
class FictitiousPlayResult:
    trajectory: np.ndarray  # (rounds, N) beliefs after each round
    actions: np.ndarray  # (rounds, N)
    converged: bool
    converged_round: int | None
    limit: tuple | None
    verification: Verification | None
    absorbed_round: int | None
    tie_probs: tuple
    settings: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return len(self.trajectory)

    @property
    def final_beliefs(self) -> tuple:
        return tuple(float(b) for b in self.trajectory[-1])

    def verdict(self) -> str:
        return "converged" if self.converged else "not converged"


def _is_strict_pure_equilibrium(game: GameSpec, actions) -> bool:
    probs = tuple(float(a) for a in actions)
    for v in client_views(game):
        adv = v.advantage(probs[: v.index] + probs[v.index + 1 :])
        if actions[v.index] == FREE and not adv < -TIE_TOL:
            return False
        if actions[v.index] == PARTICIPATE and not adv > TIE_TOL:
            return False
    return True


def absorption_round(game: GameSpec, actions: np.ndarray):
    """First round from which play stays fixed at a strict pure equilibrium, else None."""
    if len(actions) == 0:
        return None
    last = actions[-1]
    if not _is_strict_pure_equilibrium(game, last):
        return None
    changed = np.nonzero(np.any(actions != last, axis=1))[0]
    return int(changed[-1]) + 2 if len(changed) else 1


def fp_run(
    game: GameSpec,
    rounds: int = 10_000,
    seed: int = 0,
    convergence_window: int = 500,
    convergence_tol: float = 1e-3,
    initial_belief: float = 0.5,
    epsilon: float = 0.02,
    tie_probs=None,
    stop_on_convergence: bool = True,
) -> FictitiousPlayResult:
    """Run fictitious play until beliefs settle or ``rounds`` is reached.

    Converged means every belief stayed within ``convergence_tol`` over the
    last ``convergence_window`` rounds.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    n = game.n_clients
    if tie_probs is None:
        tie_probs = tie_probabilities(game)
    rng = np.random.default_rng(seed)
    views = client_views(game)
    prior = 1.0
    beliefs = (float(initial_belief),) * n
    traj = np.empty((rounds + 1, n))
    traj[0] = beliefs
    acts = np.empty((rounds, n), dtype=np.int8)
    converged_round = None
    t = 0
    for t in range(1, rounds + 1):
        draw = float(rng.random())
        actions = _choose_actions(views, beliefs, draw, tie_probs)
        acts[t - 1] = actions
        beliefs = _updated_beliefs(beliefs, actions, t, prior)
        traj[t] = beliefs
        if t >= convergence_window:
            window = traj[t - convergence_window : t + 1]
            if float(np.max(window.max(axis=0) - window.min(axis=0))) < convergence_tol:
                if converged_round is None:
                    converged_round = t
                if stop_on_convergence:
                    break
    traj = traj[1 : t + 1]
    acts = acts[:t]
    limit = verification = None
    if converged_round is not None:
        limit = tuple(float(b) for b in traj[-1])
        verification = verify_equilibrium(game, limit, epsilon)
    settings = {
        "rounds": rounds,
        "seed": seed,
        "convergence_window": convergence_window,
        "convergence_tol": convergence_tol,
        "initial_belief": initial_belief,
        "prior_weight": prior,
    }
    return FictitiousPlayResult(
        traj,
        acts,
        converged_round is not None,
        converged_round,
        limit,
        verification,
        absorption_round(game, acts),
        tuple(tie_probs),
        settings,
    )


def trajectory_csv(result: FictitiousPlayResult) -> str:
    n = result.trajectory.shape[1]
    lines = [",".join(["round"] + [f"belief_{i}" for i in range(n)])]
    for t, row in enumerate(result.trajectory, start=1):
        lines.append(",".join([str(t)] + [repr(float(b)) for b in row]))
    return "\n".join(lines) + "\n"


def save_trajectory(result: FictitiousPlayResult, path, game: GameSpec | None = None) -> Path:
    """Write the belief table plus a ``.meta.json`` sidecar with the verdict and input hash."""
    from .config import game_to_dict

    path = Path(path)
    path.write_text(trajectory_csv(result))
    meta = {
        "columns": ["round"] + [f"belief_{i}" for i in range(result.trajectory.shape[1])],
        "verdict": result.verdict(),
        "converged_round": result.converged_round,
        "absorbed_round": result.absorbed_round,
        "final_beliefs": list(result.final_beliefs),
        "tie_probs": list(result.tie_probs),
        "settings": result.settings,
    }
    if game is not None:
        meta["config_hash"] = config_hash({"game": game_to_dict(game), "settings": result.settings})
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return sidecar
