"""Command-line front end.

Exit codes: 0 ok, 1 other failure, 2 parse error, 3 solver non-convergence,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .accuracy import AccuracyTable, parametric_curve, saturating_curve
from .config import game_to_dict, load_game, read_json
from .equilibrium import VERIFY_EPSILON, solve
from .errors import ConfigError, FreeRiderError, InstanceTooLargeError, NonConvergenceError
from .game import GameSpec, SymmetricCurve, total_utility

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NONCONVERGED, EXIT_RESOURCE = 0, 1, 2, 3, 4


def _fmt_profile(profile) -> str:
    return "(" + ", ".join(f"{p:.6g}" for p in profile) + ")"


def _pct(x) -> str:
    return f"{round(100 * x, 2) + 0.0:.2f}%"


def _describe_game(game: GameSpec) -> str:
    if isinstance(game.rewards, SymmetricCurve):
        rewards = "accuracy curve A = [" + ", ".join(f"{a:.6g}" for a in game.rewards.accuracy) + "]"
    else:
        rewards = "subset reward table"
    costs = ", ".join(f"{c:.6g}" for c in game.costs)
    return f"game: N = {game.n_clients}, {rewards}, costs = [{costs}]"


def _game_from_args(args) -> GameSpec:
    if args.game:
        return load_game(args.game)
    if args.table is None or args.cost is None:
        raise ConfigError("give --game, or --table together with --cost")
    table = AccuracyTable.load(args.table)
    return GameSpec.symmetric(table.curve(), args.cost, table.n_clients)


def cmd_solve(args) -> int:
    game = _game_from_args(args)
    report = solve(game, grid_step=args.grid_step, epsilon=args.epsilon)
    print(_describe_game(game))
    print(f"solver: {report.solver}")
    print("equilibria (gap relative to the global optimum):")
    failed = False
    for n, (eq, check, gap) in enumerate(zip(report.equilibria, report.verifications, report.gaps)):
        where = eq.segment.describe() if eq.segment is not None else _fmt_profile(eq.profile)
        total = total_utility(game, eq.profile)
        status = "verified" if check.passed else f"FAILED (gain {check.worst_gain:.3g})"
        gap_text = "n/a" if gap is None else _pct(gap)
        print(f"  [{n}] {eq.kind.value:<12} {where}  total={total:.6g} gap={gap_text} {status}")
        failed |= not check.passed
    if report.reference is not None:
        print(f"Nash equilibrium (symmetric): {_fmt_profile(report.reference.profile)}")
    opt = report.optimum
    print(f"global optimum: {_fmt_profile(opt.profile)} total={opt.total:.6g} ({opt.method['search']} search)")
    if report.reference_gap is not None:
        print(f"optimality gap: {_pct(report.reference_gap)}")
    for d in report.diagnostics:
        print(f"note: {d}")
    if args.out:
        record = {"game": game_to_dict(game), **report.to_dict()}
        Path(args.out).write_text(json.dumps(record, indent=2) + "\n")
    if failed:
        print("error: an equilibrium failed the deviation check", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import diagnostics, load_sweep, run_sweep, sweep_table

    spec = load_sweep(args.sweep)
    rows = run_sweep(spec, grid_step=args.grid_step)
    text = sweep_table(spec, rows, grid_step=args.grid_step)
    out = args.out or spec.output
    if out:
        Path(out).write_text(text)
        diag = diagnostics(spec, rows)
        print(f"wrote {len(rows)} rows to {out}")
        for k, v in diag.items():
            print(f"  {k} = {v}")
    else:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(spec, rows, args.figure)
    return EXIT_OK


def cmd_fictitious(args) -> int:
    from .fictitious import fp_run, save_trajectory, trajectory_csv

    game = _game_from_args(args)
    result = fp_run(
        game,
        rounds=args.rounds,
        seed=args.seed,
        convergence_window=args.window,
        convergence_tol=args.tol,
        epsilon=args.epsilon,
    )
    if args.out:
        save_trajectory(result, args.out, game)
    report = solve(game)
    final = result.final_beliefs
    print(_describe_game(game))
    print(f"rounds played: {result.rounds}, verdict: {result.verdict()}")
    if result.absorbed_round is not None:
        print(f"absorbed into pure equilibrium from round {result.absorbed_round}")
    print(f"final beliefs: {_fmt_profile(final)}")
    if result.verification is not None:
        v = result.verification
        print(f"deviation check (epsilon={args.epsilon:g}): {'pass' if v.passed else 'fail'}, worst gain {v.worst_gain:.3g}")
    candidates = [e for e in report.equilibria if e.segment is None] or report.equilibria
    nearest = min(candidates, key=lambda e: max(abs(a - b) for a, b in zip(e.profile, final)))
    dist = max(abs(a - b) for a, b in zip(nearest.profile, final))
    print(f"nearest solver equilibrium: {_fmt_profile(nearest.profile)} (max distance {dist:.4g})")
    if report.reference is not None:
        print(f"Nash equilibrium (symmetric): {_fmt_profile(report.reference.profile)}")
    if report.optimum.total > 0:
        gap = (report.optimum.total - total_utility(game, final)) / report.optimum.total
        print(f"optimality gap at final beliefs: {_pct(gap)}")
    if args.figure:
        from .plotting import plot_trajectory

        plot_trajectory(result, args.figure, reference=nearest.profile)
    if args.print_trajectory:
        sys.stdout.write(trajectory_csv(result))
    return EXIT_OK


def _table_from_config(data, seed=None) -> AccuracyTable:
    if "curve" in data:
        return parametric_curve(data["curve"])
    if data.get("family") == "saturating":
        return saturating_curve(int(data["n_clients"]), float(data["a0"]), float(data["a_max"]), float(data["gamma"]))
    from .fl import FLConfig, build_accuracy_table

    data = dict(data)
    n = int(data.pop("n_clients"))
    mode = data.pop("mode", "by_count")
    config = FLConfig.from_dict(data)
    if seed is not None:
        config = FLConfig.from_dict({**config.to_dict(), "seeds": [seed + k for k in range(len(config.seeds))]})
    return build_accuracy_table(n, mode, config)


def cmd_reward_table(args) -> int:
    start = time.perf_counter()
    if args.curve:
        try:
            table = parametric_curve([float(a) for a in args.curve.split(",")])
        except ValueError as exc:
            raise ConfigError(str(exc), "--curve") from None
    elif args.config:
        data = read_json(args.config)
        try:
            table = _table_from_config(data, args.seed)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid reward-table config: {exc}", args.config) from None
    else:
        raise ConfigError("give --config or --curve")
    table.save(args.out)
    elapsed = time.perf_counter() - start
    print(f"wrote {table.mode} table for N = {table.n_clients} to {args.out}")
    for k in sorted(table.entries):
        print(f"  A[{k}] = {table.entries[k]:.4f}  std = {table.std.get(k, 0.0):.4f}")
    print(f"wall time: {elapsed:.2f} s")
    if args.figure:
        from .plotting import plot_accuracy

        plot_accuracy(table, args.figure)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freerider", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def game_args(p):
        p.add_argument("--game", help="game file (JSON)")
        p.add_argument("--table", help="accuracy table file, with --cost, instead of --game")
        p.add_argument("--cost", type=float, help="common participation cost for --table")

    p = sub.add_parser("solve", help="equilibria, global optimum and optimality gap")
    game_args(p)
    p.add_argument("--out", help="write the result record (JSON)")
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--epsilon", type=float, default=VERIFY_EPSILON)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="cost or client-count sweep table")
    p.add_argument("--sweep", required=True, help="sweep file (JSON)")
    p.add_argument("--out", help="output table (CSV); stdout if omitted")
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--figure", help="also render a figure to this path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fictitious", help="fictitious-play run")
    game_args(p)
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--out", help="trajectory table (CSV); a .meta.json sidecar is written next to it")
    p.add_argument("--print-trajectory", action="store_true", help="print the trajectory when --out is omitted")
    p.add_argument("--figure", help="also render the trajectory to this path")
    p.set_defaults(func=cmd_fictitious)

    p = sub.add_parser("reward-table", help="build an accuracy table (FL simulation or parametric)")
    p.add_argument("--config", help="FL or parametric config (JSON)")
    p.add_argument("--curve", help="comma-separated A(0),A(1),... for a parametric table")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="first replicate seed (overrides the config's seeds)")
    p.add_argument("--figure", help="also render the table to this path")
    p.set_defaults(func=cmd_reward_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except InstanceTooLargeError as exc:
        extra = f" (estimated cost {exc.estimated_cost:,})" if exc.estimated_cost else ""
        print(f"resource limit: {exc}{extra}", file=sys.stderr)
        return EXIT_RESOURCE
    except FreeRiderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
