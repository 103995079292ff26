"""Independent reference computations used by the tests.

Nothing here calls the package's evaluation code: utilities come from direct
enumeration of every role profile, equilibria from scanning a grid.
"""

import itertools

import numpy as np

from freerider.game import Role


def brute_utility(game, i, probs):
    """Client i's expected utility by enumerating all 2^N role profiles."""
    n = game.n_clients
    total = 0.0
    for roles in itertools.product((Role.FREE_RIDER, Role.PARTICIPANT), repeat=n):
        weight = 1.0
        for j, r in enumerate(roles):
            weight *= probs[j] if r is Role.FREE_RIDER else 1.0 - probs[j]
        if weight == 0.0:
            continue
        participants = [j for j in range(n) if j != i and roles[j] is Role.PARTICIPANT]
        value = game.rewards.reward(i, roles[i], participants)
        if roles[i] is Role.PARTICIPANT:
            value -= game.costs[i]
        total += weight * value
    return total


def brute_advantage(game, i, probs):
    """u(participate) - u(free-ride) for client i, by enumeration."""
    p = list(probs)
    p[i] = 0.0
    u_part = brute_utility(game, i, p)
    p[i] = 1.0
    return u_part - brute_utility(game, i, p)


def grid_deviation_gain(game, probs, step=0.001):
    """Largest gain any client gets by moving its own p to a grid point."""
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    worst = 0.0
    for i in range(game.n_clients):
        here = brute_utility(game, i, probs)
        p = list(probs)
        p[i] = 0.0
        u0 = brute_utility(game, i, p)
        p[i] = 1.0
        u1 = brute_utility(game, i, p)
        worst = max(worst, float(np.max(grid * u1 + (1 - grid) * u0)) - here)
    return worst


def _switch_points(game, i, step):
    """Opponent strategies where client i's advantage changes sign."""
    j = 1 - i
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)

    def adv(q):
        probs = [0.0, 0.0]
        probs[j] = q
        return brute_advantage(game, i, probs)

    values = [adv(q) for q in grid]
    points = []
    for k in range(len(grid) - 1):
        a, b = values[k], values[k + 1]
        if a == 0.0:
            points.append(float(grid[k]))
        elif a * b < 0:
            lo, hi, f_lo = grid[k], grid[k + 1], a
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                f_mid = adv(mid)
                if (f_mid < 0) == (f_lo < 0):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            points.append(0.5 * (lo + hi))
    if values[-1] == 0.0:
        points.append(1.0)
    return points


def grid_two_player_equilibria(game, step=0.001, tol=1e-9):
    """All isolated equilibria of a two-client game by grid scan.

    Every equilibrium coordinate is a corner or a point where the other
    client's best response switches; candidates from that finite set are kept
    when each client's own choice cannot be improved.
    """
    cand = [sorted({0.0, 1.0, *_switch_points(game, 1 - i, step)}) for i in range(2)]
    found = []
    for p in itertools.product(*cand):
        ok = True
        for i in range(2):
            q = list(p)
            q[i] = 0.0
            u0 = brute_utility(game, i, q)
            q[i] = 1.0
            u1 = brute_utility(game, i, q)
            if max(u0, u1) - brute_utility(game, i, p) > tol:
                ok = False
                break
        if ok:
            found.append(tuple(float(x) for x in p))
    return found


def brute_total(game, probs):
    return sum(brute_utility(game, i, probs) for i in range(game.n_clients))


def brute_symmetric_optimum(game, step=1e-4):
    """Best common strategy p on a fine grid."""
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    totals = [brute_total(game, [p] * game.n_clients) for p in grid]
    k = int(np.argmax(totals))
    return float(grid[k]), float(totals[k])


def numerical_grad(f, params, h=1e-5):
    """Central differences for every entry of every array in ``params``."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + h
            up = f()
            arr[idx] = old - h
            down = f()
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads[name] = g
    return grads
