"""Best responses, Nash equilibria and cooperative optima.

Every client's expected utility is affine in its own free-riding probability,
so its best response depends only on the sign of its participation advantage

    advantage_i = E[u_P - u_F | opponents] - c_i,

and an interior (mixed) strategy is a best response only when that
advantage vanishes.  The KKT multipliers of the box constraints follow
directly from the advantage: advantage_i = mu_lower - mu_upper.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceTooLargeError, NonConvergenceError, UndefinedGapError
from .game import (
    GameSpec,
    Role,
    StrategyProfile,
    client_expected_utility,
    expected_rewards,
    total_utility,
)

TIE_TOL = 1e-9
VERIFY_EPSILON = 1e-4
VERIFY_GRID_STEP = 0.001
MAX_CUBE_CLIENTS = 6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ResponseKind(enum.Enum):
    PURE_FREE_RIDE = "free_ride"
    PURE_PARTICIPATE = "participate"
    INDIFFERENT = "indifferent"


@dataclass(frozen=True)
class BestResponse:
    kind: ResponseKind
    advantage: float

    @property
    def probability(self):
        """Free-riding probability of the pure response, None when indifferent."""
        if self.kind is ResponseKind.PURE_FREE_RIDE:
            return 1.0
        if self.kind is ResponseKind.PURE_PARTICIPATE:
            return 0.0
        return None


class EquilibriumKind(enum.Enum):
    PURE = "pure"
    MIXED = "mixed"
    MIXED_FAMILY = "mixed_family"


@dataclass(frozen=True)
class Segment:
    """A line of equilibria: ``fixed_client`` plays ``fixed_value`` while
    ``free_client`` may pick any probability in [low, high]."""

    fixed_client: int
    fixed_value: float
    free_client: int
    low: float
    high: float

    def profile_at(self, p: float) -> StrategyProfile:
        probs = [0.0, 0.0]
        probs[self.fixed_client] = self.fixed_value
        probs[self.free_client] = p
        return StrategyProfile(probs)

    def describe(self) -> str:
        free = "p"
        parts = ["", ""]
        parts[self.fixed_client] = f"{self.fixed_value:g}"
        parts[self.free_client] = free
        return f"({parts[0]}, {parts[1]}), p in [{self.low:.6g}, {self.high:.6g}]"


@dataclass(frozen=True)
class EquilibriumResult:
    profile: StrategyProfile
    kind: EquilibriumKind
    kkt_residual: float
    multipliers: tuple
    segment: Segment | None = None
    iterations: int = 0
    notes: tuple = ()

    def to_dict(self) -> dict:
        out = {
            "profile": list(self.profile.probs),
            "kind": self.kind.value,
            "kkt_residual": self.kkt_residual,
            "multipliers": [list(m) for m in self.multipliers],
        }
        if self.segment is not None:
            s = self.segment
            out["segment"] = {
                "fixed_client": s.fixed_client,
                "fixed_value": s.fixed_value,
                "free_client": s.free_client,
                "low": s.low,
                "high": s.high,
            }
        if self.iterations:
            out["iterations"] = self.iterations
        if self.notes:
            out["notes"] = list(self.notes)
        return out


@dataclass(frozen=True)
class GlobalOptimum:
    profile: StrategyProfile
    total: float
    method: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"profile": list(self.profile.probs), "total": self.total, "method": dict(self.method)}


@dataclass(frozen=True)
class Verification:
    passed: bool
    worst_client: int
    worst_deviation: float
    worst_gain: float


class EquilibriumSet(list):
    """List of equilibria carrying solver diagnostics."""

    def __init__(self, items=(), diagnostics=()):
        super().__init__(items)
        self.diagnostics = list(diagnostics)


def clamp01(x: float) -> float:
    if math.isnan(x):
        raise ValueError("clamp01 of NaN")
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return float(x) + 0.0  # drop negative zero


def indifference_residual(game: GameSpec, i: int, p_others) -> float:
    """Expected reward gain from participating, net of cost; zero means indifferent."""
    e_free, e_part = expected_rewards(game, i, p_others)
    return e_part - e_free - game.costs[i]


def best_response(game: GameSpec, i: int, p_others, tol: float = TIE_TOL) -> BestResponse:
    adv = indifference_residual(game, i, p_others)
    if adv > tol:
        return BestResponse(ResponseKind.PURE_PARTICIPATE, adv)
    if adv < -tol:
        return BestResponse(ResponseKind.PURE_FREE_RIDE, adv)
    return BestResponse(ResponseKind.INDIFFERENT, adv)


def _gain(adv: float, p: float) -> float:
    # best unilateral improvement: move to p=0 if adv > 0, to p=1 if adv < 0
    return max(p * adv, -(1.0 - p) * adv, 0.0)


def _multipliers(adv: float, p: float) -> tuple:
    if p <= 0.0:
        return (max(adv, 0.0), 0.0)
    if p >= 1.0:
        return (0.0, max(-adv, 0.0))
    return (0.0, 0.0)


def make_result(game: GameSpec, profile, kind=None, **extra) -> EquilibriumResult:
    """Package a profile with its exact deviation residual and KKT multipliers."""
    if not isinstance(profile, StrategyProfile):
        profile = StrategyProfile(tuple(profile))
    residual = 0.0
    mus = []
    for i in range(game.n_clients):
        adv = indifference_residual(game, i, profile.probs)
        residual = max(residual, _gain(adv, profile[i]))
        mus.append(_multipliers(adv, profile[i]))
    if kind is None:
        kind = EquilibriumKind.PURE if all(p in (0.0, 1.0) for p in profile) else EquilibriumKind.MIXED
    return EquilibriumResult(profile, kind, residual, tuple(mus), **extra)


def verify_equilibrium(
    game: GameSpec, profile, epsilon: float = VERIFY_EPSILON, grid_step: float = VERIFY_GRID_STEP
) -> Verification:
    """Brute-force unilateral deviation check over a grid of own strategies."""
    if not isinstance(profile, StrategyProfile):
        profile = StrategyProfile(tuple(profile))
    n_steps = int(round(1.0 / grid_step))
    grid = np.linspace(0.0, 1.0, n_steps + 1)
    worst = (0, profile[0], 0.0)
    for i in range(game.n_clients):
        current = client_expected_utility(game, i, profile)
        e_free, e_part = expected_rewards(game, i, profile.probs)
        values = grid * e_free + (1.0 - grid) * (e_part - game.costs[i])
        k = int(np.argmax(values))
        gain = float(values[k] - current)
        if i == 0 or gain > worst[2]:
            worst = (i, float(grid[k]), gain)
    client, deviation, gain = worst
    return Verification(gain <= epsilon, client, deviation, max(gain, 0.0))


# --- two clients -----------------------------------------------------------


def _two_player_rewards(game: GameSpec, i: int) -> dict:
    """Client i's rewards keyed 'FF', 'FP', 'PF', 'PP' (own role, opponent role)."""
    j = 1 - i
    r = game.rewards
    return {
        "FF": r.reward(i, Role.FREE_RIDER, ()),
        "FP": r.reward(i, Role.FREE_RIDER, (j,)),
        "PF": r.reward(i, Role.PARTICIPANT, ()),
        "PP": r.reward(i, Role.PARTICIPANT, (j,)),
    }


def _affine_set(at0: float, at1: float, want_nonneg: bool, tol: float):
    """Sub-interval of [0,1] where f(p) = (1-p)*at0 + p*at1 is >= 0 (or <= 0)."""
    if not want_nonneg:
        at0, at1 = -at0, -at1
    slope = at1 - at0
    if abs(slope) <= tol:
        return (0.0, 1.0) if at0 >= -tol else None
    root = -at0 / slope
    if slope > 0:
        lo, hi = max(root, 0.0), 1.0
    else:
        lo, hi = 0.0, min(root, 1.0)
    if lo > hi:
        # tolerate ties at the boundary
        if at0 >= -tol:
            return (0.0, 0.0)
        if at1 >= -tol:
            return (1.0, 1.0)
        return None
    return (lo + 0.0, hi + 0.0)


def mixing_probabilities(game: GameSpec, tol: float = TIE_TOL):
    """Clamped interior mixing probabilities (p1_M, p2_M) for a two-client game.

    Entry i is the free-riding probability of client i that leaves the
    other client indifferent; None when that client's advantage does not
    depend on client i.
    """
    out = []
    for i in range(2):
        u = _two_player_rewards(game, 1 - i)
        denom = u["PF"] - u["PP"] + u["FP"] - u["FF"]
        if abs(denom) <= tol:
            out.append(None)
        else:
            out.append(clamp01((game.costs[1 - i] + u["FP"] - u["PP"]) / denom))
    return tuple(out)


def two_player_equilibria(game: GameSpec, tol: float = TIE_TOL) -> EquilibriumSet:
    """All Nash equilibria of a two-client game.

    Pure profiles, the boundary families that appear when a client is exactly
    indifferent against a pure opponent, and the interior mixing point.
    """
    if game.n_clients != 2:
        raise ValueError("two_player_equilibria needs exactly two clients")
    u = [_two_player_rewards(game, i) for i in range(2)]
    c = game.costs
    # advantage of client i when the opponent participates / free-rides
    vs_part = [u[i]["PP"] - c[i] - u[i]["FP"] for i in range(2)]
    vs_free = [u[i]["PF"] - c[i] - u[i]["FF"] for i in range(2)]

    found = EquilibriumSet()
    seen = []

    def add(profile, **extra):
        key = tuple(profile)
        if extra.get("segment") is None:
            if any(max(abs(a - b) for a, b in zip(key, s)) <= 1e-9 for s in seen):
                return
            seen.append(key)
        found.append(make_result(game, profile, **extra))

    if vs_part[0] >= -tol and vs_part[1] >= -tol:
        add((0.0, 0.0))
    if vs_free[0] <= tol and vs_free[1] <= tol:
        add((1.0, 1.0))
    if vs_free[0] >= -tol and vs_part[1] <= tol:
        add((0.0, 1.0))
    if vs_free[1] >= -tol and vs_part[0] <= tol:
        add((1.0, 0.0))

    # (fixed client, its pure value, condition on the free client, whether the
    # fixed client needs advantage >= 0 (participating) or <= 0 (free-riding))
    families = (
        (0, 0.0, vs_part[1]),
        (1, 0.0, vs_part[0]),
        (0, 1.0, vs_free[1]),
        (1, 1.0, vs_free[0]),
    )
    for fixed, value, free_adv in families:
        free = 1 - fixed
        if abs(free_adv) > tol:
            continue
        # fixed client's advantage as a function of the free client's strategy
        interval = _affine_set(vs_part[fixed], vs_free[fixed], want_nonneg=(value == 0.0), tol=tol)
        if interval is None or interval[1] - interval[0] <= 1e-12:
            continue
        lo, hi = interval
        slope = vs_free[fixed] - vs_part[fixed]
        endpoint = lo
        if abs(slope) > tol:
            root = -vs_part[fixed] / slope
            if lo - 1e-12 <= root <= hi + 1e-12:
                endpoint = clamp01(root)
        seg = Segment(fixed, value, free, lo, hi)
        found.append(make_result(game, seg.profile_at(endpoint), EquilibriumKind.MIXED_FAMILY, segment=seg))

    p_mix = mixing_probabilities(game, tol)
    if None in p_mix:
        for i, p in enumerate(p_mix):
            if p is None:
                found.diagnostics.append(
                    f"degenerate game: client {1 - i}'s advantage does not depend on client {i}; "
                    "interior mixing probability undefined"
                )
    else:
        candidate = make_result(game, p_mix)
        if candidate.kkt_residual <= tol:
            add(p_mix)
    return found


# --- symmetric games -------------------------------------------------------


def _require_symmetric(game: GameSpec):
    if not game.is_symmetric:
        raise ValueError("game needs a shared accuracy curve and a common cost")


def symmetric_advantage(game: GameSpec, p: float) -> float:
    """Participation advantage of any client when every opponent free-rides with probability p."""
    return indifference_residual(game, 0, (p,) * (game.n_clients - 1))


def _bisect(f, lo, hi, f_lo, xtol=1e-13, max_iter=200):
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def symmetric_equilibria(game: GameSpec, tol: float = TIE_TOL, scan_points: int = 1000) -> list:
    """Every symmetric equilibrium p (all clients free-ride with probability p), ascending."""
    _require_symmetric(game)
    g = lambda p: symmetric_advantage(game, p)  # noqa: E731
    roots = []
    g0, g1 = g(0.0), g(1.0)
    if g0 >= -tol:
        roots.append(0.0)
    grid = np.linspace(0.0, 1.0, scan_points + 1)
    values = [g0] + [g(p) for p in grid[1:-1]] + [g1]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if abs(fb) <= tol and 0.0 < b < 1.0:
            roots.append(float(b))
        elif fa * fb < 0 and abs(fa) > tol:
            roots.append(_bisect(g, float(a), float(b), fa))
    if g1 <= tol:
        roots.append(1.0)

    unique = []
    for r in sorted(roots):
        if not unique or r - unique[-1] > 1e-7:
            unique.append(r)
        elif r in (0.0, 1.0):
            unique[-1] = r
    return [make_result(game, (r,) * game.n_clients) for r in unique]


def symmetric_equilibrium(game: GameSpec, tol: float = TIE_TOL) -> EquilibriumResult:
    """The symmetric equilibrium: full participation if it pays, full free-riding
    if participation never pays, else the indifference root.  Additional
    equilibria, if any, are listed in ``notes``."""
    all_eq = symmetric_equilibria(game, tol)
    g0 = symmetric_advantage(game, 0.0)
    g1 = symmetric_advantage(game, 1.0)
    if g0 >= -tol:
        primary = next(e for e in all_eq if e.profile[0] == 0.0)
    elif g1 <= tol:
        primary = next(e for e in all_eq if e.profile[0] == 1.0)
    else:
        primary = all_eq[0]
    if len(all_eq) > 1:
        others = ", ".join(f"{e.profile[0]:.9g}" for e in all_eq)
        note = f"multiplicity: {len(all_eq)} symmetric equilibria at p = {others}"
        primary = EquilibriumResult(
            primary.profile, primary.kind, primary.kkt_residual, primary.multipliers, notes=(note,)
        )
    return primary


# --- general games ---------------------------------------------------------


def best_response_iteration(
    game: GameSpec,
    initial=None,
    damping: float = 0.5,
    max_iters: int = 10_000,
    tol: float = 1e-13,
    epsilon: float = VERIFY_EPSILON,
) -> EquilibriumResult:
    """Damped simultaneous best-response iteration.

    Each client moves toward ``clamp01(p_i - advantage_i / scale)``: a corner
    when the advantage is large, the current point when indifferent.  Raises
    NonConvergenceError (with the trajectory in ``report``) if no fixed point
    is reached within ``max_iters``.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    n = game.n_clients
    p = np.full(n, 0.5) if initial is None else np.array(tuple(initial), dtype=float)
    scale = max(1.0, n - 1.0)
    trajectory = [p.copy()]
    for it in range(1, max_iters + 1):
        adv = np.array([indifference_residual(game, i, p) for i in range(n)])
        target = np.clip(p - adv / scale, 0.0, 1.0)
        new = (1.0 - damping) * p + damping * target
        step = float(np.max(np.abs(new - p)))
        p = new
        trajectory.append(p.copy())
        if step <= tol:
            result = make_result(game, np.clip(p, 0.0, 1.0), iterations=it)
            check = verify_equilibrium(game, result.profile, epsilon)
            if not check.passed:
                raise NonConvergenceError(
                    f"fixed point fails the deviation check (gain {check.worst_gain:.3g})",
                    {"trajectory": trajectory, "verification": check},
                )
            return result
    raise NonConvergenceError(
        f"best-response iteration did not converge in {max_iters} iterations",
        {"trajectory": trajectory, "last": tuple(p)},
    )


def _golden_max(f, lo, hi, iters):
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def global_optimum(
    game: GameSpec, grid_step: float = 0.01, refine_iters: int = 64, symmetric=None, max_grid_points=250_000
) -> GlobalOptimum:
    """Maximize total utility by grid scan plus golden-section refinement.

    Symmetric games search a single common probability unless
    ``symmetric=False``; other games search the N-cube (N <= 6), always
    including its vertices.
    """
    if symmetric is None:
        symmetric = game.is_symmetric
    n = game.n_clients
    n_steps = max(1, int(round(1.0 / grid_step)))

    if symmetric:
        _require_symmetric(game)
        f = lambda p: n * client_expected_utility(game, 0, (p,) * n)  # noqa: E731
        grid = np.linspace(0.0, 1.0, n_steps + 1)
        values = np.array([f(p) for p in grid])
        k = int(np.argmax(values))
        best_p, best = float(grid[k]), float(values[k])
        lo, hi = max(0.0, best_p - 1.0 / n_steps), min(1.0, best_p + 1.0 / n_steps)
        x, fx = _golden_max(f, lo, hi, refine_iters)
        if fx > best:
            best_p, best = x, fx
        method = {"search": "symmetric", "grid_step": 1.0 / n_steps, "refine_iters": refine_iters}
        return GlobalOptimum(StrategyProfile((best_p,) * n), best, method)

    if n > MAX_CUBE_CLIENTS:
        raise InstanceTooLargeError(
            f"full-cube search is limited to N <= {MAX_CUBE_CLIENTS}; "
            "give the game a symmetric accuracy curve and common cost to search one probability"
        )
    per_axis = n_steps + 1
    if per_axis**n > max_grid_points:
        per_axis = max(2, int(max_grid_points ** (1.0 / n)))
    axis = np.linspace(0.0, 1.0, per_axis)
    best, best_p = -math.inf, None
    for idx in np.ndindex(*(per_axis,) * n):
        point = axis[list(idx)]
        value = total_utility(game, point)
        if value > best:
            best, best_p = value, point
    for corner in np.ndindex(*(2,) * n):
        point = np.array(corner, dtype=float)
        value = total_utility(game, point)
        if value > best:
            best, best_p = value, point

    # coordinate-wise golden-section passes around the best point
    step = 1.0 / (per_axis - 1)
    p = np.array(best_p, dtype=float)
    for _ in range(50):
        improved = False
        for i in range(n):
            def f(x, i=i):
                q = p.copy()
                q[i] = x
                return total_utility(game, q)

            x, fx = _golden_max(f, max(0.0, p[i] - step), min(1.0, p[i] + step), refine_iters)
            for cand, val in ((x, fx), (max(0.0, p[i] - step), None), (min(1.0, p[i] + step), None)):
                val = f(cand) if val is None else val
                if val > best + 1e-15:
                    best, p[i], improved = val, cand, True
        if not improved:
            break
    method = {"search": "cube", "grid_step": step, "refine_iters": refine_iters}
    return GlobalOptimum(StrategyProfile(tuple(p)), float(best), method)


def optimality_gap(game: GameSpec, ne, opt: GlobalOptimum) -> float:
    """Relative shortfall of the equilibrium's total utility versus the optimum."""
    if opt.total <= 0.0:
        raise UndefinedGapError(f"optimum total utility {opt.total!r} is not positive")
    profile = ne.profile if isinstance(ne, EquilibriumResult) else ne
    return (opt.total - total_utility(game, profile)) / opt.total


# --- one-call solving ------------------------------------------------------


@dataclass
class SolveReport:
    equilibria: list
    reference: EquilibriumResult | None
    optimum: GlobalOptimum
    verifications: list
    gaps: list
    reference_gap: float | None
    diagnostics: list = field(default_factory=list)
    solver: str = ""

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "equilibria": [
                {**e.to_dict(), "verified": v.passed, "worst_gain": v.worst_gain, "gap": g}
                for e, v, g in zip(self.equilibria, self.verifications, self.gaps)
            ],
            "reference_equilibrium": None if self.reference is None else self.reference.to_dict(),
            "global_optimum": self.optimum.to_dict(),
            "reference_gap": self.reference_gap,
            "diagnostics": list(self.diagnostics),
        }


def solve(game: GameSpec, grid_step: float = 0.01, epsilon: float = VERIFY_EPSILON) -> SolveReport:
    """Pick the right equilibrium solver, then add the optimum, checks and gaps.

    For symmetric games the reference equilibrium is the symmetric one with
    the highest free-riding probability, compared against the best common
    strategy.
    """
    diagnostics = []
    reference = None
    if game.n_clients == 2:
        eqs = two_player_equilibria(game)
        diagnostics.extend(eqs.diagnostics)
        solver = "two_player"
    elif game.is_symmetric:
        eqs = symmetric_equilibria(game)
        solver = "symmetric"
    else:
        eqs = [best_response_iteration(game)]
        solver = "best_response_iteration"
    if game.is_symmetric:
        sym = symmetric_equilibria(game)
        if len(sym) > 1:
            diagnostics.append(f"{len(sym)} symmetric equilibria; reference uses the largest")
        reference = sym[-1]
    optimum = global_optimum(game, grid_step=grid_step)
    verifications = [verify_equilibrium(game, e.profile, epsilon) for e in eqs]
    gaps = [optimality_gap(game, e, optimum) if optimum.total > 0 else None for e in eqs]
    ref_gap = None
    if reference is not None and optimum.total > 0:
        ref_gap = optimality_gap(game, reference, optimum)
    return SolveReport(list(eqs), reference, optimum, verifications, gaps, ref_gap, diagnostics, solver)
