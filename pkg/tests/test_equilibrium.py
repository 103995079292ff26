import numpy as np
import pytest

from conftest import EXAMPLE_CURVE, FIXTURE_3, random_symmetric_curve, random_two_client_game
from oracles import brute_advantage, brute_symmetric_optimum, grid_deviation_gain
from freerider.equilibrium import (
    EquilibriumKind,
    ResponseKind,
    best_response,
    best_response_iteration,
    global_optimum,
    indifference_residual,
    make_result,
    mixing_probabilities,
    optimality_gap,
    solve,
    symmetric_equilibria,
    symmetric_equilibrium,
    two_player_equilibria,
    verify_equilibrium,
)
from freerider.errors import NonConvergenceError, UndefinedGapError
from freerider.game import GameSpec, SymmetricCurve


def isolated(eqs):
    return sorted(tuple(e.profile) for e in eqs if e.segment is None)


def families(eqs):
    return sorted(
        (s.fixed_client, s.fixed_value, s.low, s.high) for s in (e.segment for e in eqs) if s is not None
    )


def test_best_response_corners(example_game):
    game = example_game(0.2)
    assert best_response(game, 0, [0.0]).kind is ResponseKind.PURE_FREE_RIDE
    assert best_response(game, 0, [1.0]).kind is ResponseKind.PURE_PARTICIPATE
    br = best_response(game, 0, [0.5])
    assert br.kind is ResponseKind.INDIFFERENT and br.probability is None


def test_residual_sign_matches_oracle(example_game):
    game = example_game(0.2)
    for q in np.linspace(0, 1, 11):
        assert indifference_residual(game, 1, [q, 0.3]) == pytest.approx(brute_advantage(game, 1, [q, 0.3]), abs=1e-12)


@pytest.mark.parametrize(
    "cost, pure, fams",
    [
        (0.05, [(0.0, 0.0)], []),
        (0.10, [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)], [(0, 0.0, 0.0, 1.0), (1, 0.0, 0.0, 1.0)]),
        (0.20, [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)], []),
        (0.30, [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0)], [(0, 1.0, 0.0, 1.0), (1, 1.0, 0.0, 1.0)]),
        (0.40, [(1.0, 1.0)], []),
    ],
)
def test_example_equilibrium_sets(example_game, cost, pure, fams):
    eqs = two_player_equilibria(example_game(cost))
    got = isolated(eqs)
    assert len(got) == len(pure)
    for a, b in zip(got, pure):
        assert a == pytest.approx(b, abs=1e-6)
    assert families(eqs) == [pytest.approx(f, abs=1e-9) for f in fams]
    for e in eqs:
        assert verify_equilibrium(example_game(cost), e.profile).passed
        assert all(m >= 0 for mu in e.multipliers for m in mu)


def test_family_members_are_equilibria(example_game):
    eqs = two_player_equilibria(example_game(0.3))
    for e in eqs:
        if e.segment is None:
            continue
        assert e.kind is EquilibriumKind.MIXED_FAMILY
        for p in np.linspace(e.segment.low, e.segment.high, 7):
            assert verify_equilibrium(example_game(0.3), e.segment.profile_at(p)).passed


def test_off_equilibrium_profile_fails(example_game):
    check = verify_equilibrium(example_game(0.2), (0.5, 0.4))
    assert not check.passed
    # the first client strictly prefers to free-ride against p = 0.4
    assert check.worst_client == 0
    assert check.worst_deviation == 1.0
    assert check.worst_gain == pytest.approx(0.5 * 0.02, abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_mixing_point_leaves_other_client_indifferent(seed):
    game = random_two_client_game(np.random.default_rng(seed))
    p = mixing_probabilities(game)
    if None in p:
        pytest.skip("degenerate game")
    for i in range(2):
        if 0.0 < p[i] < 1.0:
            probs = [0.0, 0.0]
            probs[i] = p[i]
            assert abs(indifference_residual(game, 1 - i, probs)) <= 1e-9


def test_mixed_kkt_multipliers_zero(example_game):
    eq = make_result(example_game(0.2), (0.5, 0.5))
    assert eq.kind is EquilibriumKind.MIXED
    assert eq.multipliers == ((0.0, 0.0), (0.0, 0.0))
    assert eq.kkt_residual <= 1e-12


def test_pure_multipliers(example_game):
    eq = make_result(example_game(0.05), (0.0, 0.0))
    # participating strictly pays: lower-bound multiplier equals the advantage
    assert eq.multipliers[0][0] == pytest.approx(0.1 - 0.05)
    assert eq.multipliers[0][1] == 0.0


def test_degenerate_game_reports_undefined_mixing():
    game = GameSpec.symmetric((0.5, 0.7, 0.9), 0.2)
    eqs = two_player_equilibria(game)
    assert eqs.diagnostics and "undefined" in eqs.diagnostics[0]
    for e in eqs:
        assert verify_equilibrium(game, e.profile).passed


@pytest.mark.parametrize("seed", range(40))
def test_random_two_client_residuals_agree_with_grid(seed):
    game = random_two_client_game(np.random.default_rng(seed))
    for e in two_player_equilibria(game):
        assert grid_deviation_gain(game, tuple(e.profile)) <= 1e-9
        assert e.kkt_residual <= 1e-9


def test_three_client_symmetric_agrees_with_iteration():
    game = GameSpec.symmetric(FIXTURE_3, 0.12)
    sym = symmetric_equilibrium(game)
    bri = best_response_iteration(game)
    assert np.allclose(bri.profile.probs, sym.profile.probs, atol=1e-6)
    assert verify_equilibrium(game, sym.profile).passed
    assert 0.0 < sym.profile[0] < 1.0


def test_symmetric_primary_rule():
    assert symmetric_equilibrium(GameSpec.symmetric(FIXTURE_3, 0.01)).profile[0] == 0.0
    assert symmetric_equilibrium(GameSpec.symmetric(FIXTURE_3, 0.5)).profile[0] == 1.0


def test_symmetric_multiplicity_is_reported():
    # convex-then-flat curve: participation pays only when enough others participate
    game = GameSpec.symmetric((0.1, 0.12, 0.6, 0.95), 0.2)
    eqs = symmetric_equilibria(game)
    assert len(eqs) >= 2
    assert symmetric_equilibrium(game).notes
    for e in eqs:
        assert verify_equilibrium(game, e.profile).passed


def test_asymmetric_three_clients_iteration():
    game = GameSpec(3, (0.05, 0.12, 0.2), SymmetricCurve(FIXTURE_3))
    eq = best_response_iteration(game)
    assert grid_deviation_gain(game, tuple(eq.profile)) <= 1e-4


def test_iteration_reports_non_convergence():
    with pytest.raises(NonConvergenceError) as err:
        best_response_iteration(GameSpec.symmetric(FIXTURE_3, 0.12), max_iters=3)
    assert len(err.value.report["trajectory"]) == 4


def test_example_optimum_and_gap(example_game):
    game = example_game(0.3)
    opt = global_optimum(game)
    assert opt.profile.probs == pytest.approx((0.25, 0.25), abs=1e-6)
    assert opt.total == pytest.approx(1.225, abs=1e-9)
    assert optimality_gap(game, (1.0, 1.0), opt) == pytest.approx(18 / 98, rel=1e-6)
    p, total = brute_symmetric_optimum(game)
    assert opt.total >= total - 1e-12


def test_cube_optimum_includes_asymmetric_corners(example_game):
    opt = global_optimum(example_game(0.3), symmetric=False)
    assert sorted(opt.profile.probs) == [0.0, 1.0]
    assert opt.total == pytest.approx(1.3)


@pytest.mark.parametrize("seed", range(5))
def test_symmetric_optimum_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    game = GameSpec.symmetric(random_symmetric_curve(rng, 3), float(rng.uniform(0, 0.3)))
    p, total = brute_symmetric_optimum(game, step=1e-3)
    assert global_optimum(game).total == pytest.approx(total, abs=1e-6)


def test_gap_undefined_for_zero_optimum():
    game = GameSpec.symmetric((0.0, 0.0, 0.0), 0.0)
    with pytest.raises(UndefinedGapError):
        optimality_gap(game, (1.0, 1.0), global_optimum(game))


def test_solve_picks_solver(example_game):
    assert solve(example_game(0.3)).solver == "two_player"
    assert solve(GameSpec.symmetric(FIXTURE_3, 0.12)).solver == "symmetric"
    report = solve(GameSpec(3, (0.05, 0.12, 0.2), SymmetricCurve(FIXTURE_3)))
    assert report.solver == "best_response_iteration"
    assert all(v.passed for v in report.verifications)


def test_solve_reference_gap(example_game):
    report = solve(example_game(0.3))
    assert tuple(report.reference.profile) == (1.0, 1.0)
    assert report.reference_gap == pytest.approx(18 / 98, rel=1e-3)
    record = report.to_dict()
    assert record["reference_equilibrium"]["kind"] == "pure"
