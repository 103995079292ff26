"""Cost and client-count sweeps over symmetric games.

Each row compares the symmetric Nash equilibrium (the one with the highest
free-riding probability when several exist) with the best common strategy.

Sweep file schema (JSON)::

    {"parameter": "cost", "from": 0.0, "to": 0.5, "step": 0.01,
     "n_clients": 2, "rewards": {"curve": [0.5, 0.8, 0.9]}}

    {"parameter": "n_clients", "values": [2, 3, 4], "cost": 0.15,
     "rewards": {"family": "saturating", "a0": 0.5, "a_max": 0.95, "gamma": 0.6}}

``rewards`` is one of ``{"curve": [...]}``, a saturating family as above,
``{"accuracy_table": "path"}`` (cost sweeps) or ``{"tables": {"2": "path",
...}}`` (one FL-built table per N).  Relative paths resolve against the
sweep file's directory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .accuracy import AccuracyTable, config_hash, saturating_curve
from .config import read_json
from .equilibrium import global_optimum, symmetric_equilibria
from .errors import ConfigError
from .game import GameSpec, total_utility

COLUMNS = (
    "value",
    "ne_free_prob",
    "opt_free_prob",
    "ne_total_utility",
    "opt_total_utility",
    "gap",
    "ne_utility_per_client",
    "opt_utility_per_client",
    "n_symmetric_equilibria",
    "status",
)


@dataclass
class SweepSpec:
    parameter: str
    values: list
    n_clients: int | None = None
    cost: float | None = None
    rewards: dict = field(default_factory=dict)
    output: str | None = None
    base_dir: Path | None = None

    def __post_init__(self):
        if self.parameter not in ("cost", "n_clients"):
            raise ConfigError(f"parameter must be 'cost' or 'n_clients', got {self.parameter!r}", "parameter")
        if not self.values:
            raise ConfigError("sweep has no values", "values")
        if self.parameter == "cost":
            if self.n_clients is None or self.n_clients < 2:
                raise ConfigError("cost sweeps need n_clients >= 2", "n_clients")
            if any(v < 0 for v in self.values):
                raise ConfigError("costs must be nonnegative", "from")
        else:
            if self.cost is None or self.cost < 0:
                raise ConfigError("n_clients sweeps need a nonnegative cost", "cost")
            if any(int(v) != v or v < 2 for v in self.values):
                raise ConfigError("n_clients entries must be integers >= 2", "values")
            self.values = [int(v) for v in self.values]

    def to_dict(self) -> dict:
        out = {"parameter": self.parameter, "values": list(self.values), "rewards": self.rewards}
        if self.n_clients is not None:
            out["n_clients"] = self.n_clients
        if self.cost is not None:
            out["cost"] = self.cost
        return out

    def curve_for(self, n: int) -> tuple:
        """Accuracy curve A(0..n) and a label of where it came from."""
        r = self.rewards
        if "curve" in r:
            curve = [float(a) for a in r["curve"]]
            if len(curve) < n + 1:
                raise ConfigError(f"curve has {len(curve)} entries, N = {n} needs {n + 1}", "rewards.curve")
            return curve[: n + 1], "curve"
        if r.get("family") == "saturating":
            try:
                table = saturating_curve(n, float(r["a0"]), float(r["a_max"]), float(r["gamma"]))
            except KeyError as exc:
                raise ConfigError(f"missing {exc.args[0]!r}", "rewards") from None
            return table.curve(), "saturating"
        if "accuracy_table" in r:
            table = AccuracyTable.load(self._resolve(r["accuracy_table"]))
            return table.curve()[: n + 1], "accuracy_table"
        if "tables" in r:
            path = r["tables"].get(str(n))
            if path is None:
                raise ConfigError(f"no accuracy table for N = {n}", "rewards.tables")
            return AccuracyTable.load(self._resolve(path)).curve()[: n + 1], "fl_tables"
        raise ConfigError("rewards needs curve, family, accuracy_table or tables", "rewards")

    def _resolve(self, path) -> Path:
        p = Path(path)
        if self.base_dir is not None and not p.is_absolute():
            p = self.base_dir / p
        return p

    def game_at(self, value) -> GameSpec:
        if self.parameter == "cost":
            n, cost = self.n_clients, float(value)
        else:
            n, cost = int(value), float(self.cost)
        curve, _ = self.curve_for(n)
        return GameSpec.symmetric(curve, cost, n)


def cost_grid(start: float, stop: float, step: float) -> list:
    if not step > 0:
        raise ConfigError("step must be positive", "step")
    if start > stop:
        raise ConfigError("from must not exceed to", "from")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def sweep_from_dict(data: dict, base_dir=None) -> SweepSpec:
    if not isinstance(data, dict):
        raise ConfigError("sweep file must hold an object")
    param = data.get("parameter")
    try:
        if param == "cost":
            values = cost_grid(float(data["from"]), float(data["to"]), float(data["step"]))
        elif param == "n_clients":
            values = list(data["values"])
        else:
            raise ConfigError(f"parameter must be 'cost' or 'n_clients', got {param!r}", "parameter")
        n = data.get("n_clients")
        return SweepSpec(
            param,
            values,
            n_clients=None if n is None else int(n),
            cost=None if data.get("cost") is None else float(data["cost"]),
            rewards=dict(data.get("rewards", {})),
            output=data.get("output"),
            base_dir=None if base_dir is None else Path(base_dir),
        )
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_sweep(path) -> SweepSpec:
    path = Path(path)
    data = read_json(path)
    try:
        return sweep_from_dict(data, path.parent)
    except ConfigError as exc:
        raise ConfigError(str(exc), str(path)) from None


def sweep_row(spec: SweepSpec, value, grid_step: float = 0.01) -> dict:
    row = {"value": value}
    try:
        game = spec.game_at(value)
        n = game.n_clients
        eqs = symmetric_equilibria(game)
        ne = eqs[-1]
        opt = global_optimum(game, grid_step=grid_step)
        ne_total = total_utility(game, ne.profile)
        row.update(
            ne_free_prob=ne.profile[0],
            opt_free_prob=opt.profile[0],
            ne_total_utility=ne_total,
            opt_total_utility=opt.total,
            gap=(opt.total - ne_total) / opt.total if opt.total > 0 else float("nan"),
            ne_utility_per_client=ne_total / n,
            opt_utility_per_client=opt.total / n,
            n_symmetric_equilibria=len(eqs),
            status="ok",
        )
    except ConfigError:
        raise
    except Exception as exc:  # flagged row, sweep continues
        for col in COLUMNS[1:-1]:
            row.setdefault(col, float("nan"))
        row["status"] = f"error: {type(exc).__name__}: {exc}".replace(",", ";")
    return row


def run_sweep(spec: SweepSpec, grid_step: float = 0.01) -> list:
    return [sweep_row(spec, v, grid_step) for v in spec.values]


def _max_decrease(values) -> float:
    worst = 0.0
    for a, b in zip(values, values[1:]):
        if not (math.isnan(a) or math.isnan(b)):
            worst = max(worst, a - b)
    return worst


def diagnostics(spec: SweepSpec, rows) -> dict:
    ok = [r for r in rows if r["status"] == "ok"]
    ne_p = [r["ne_free_prob"] for r in ok]
    diag = {
        "max_violation_ne_prob_nondecreasing": _max_decrease(ne_p),
        "max_violation_ne_prob_ge_opt": max([r["opt_free_prob"] - r["ne_free_prob"] for r in ok] + [0.0]),
        "failed_rows": len(rows) - len(ok),
    }
    if spec.parameter == "n_clients":
        diag["max_violation_gap_nondecreasing"] = _max_decrease([r["gap"] for r in ok])
    if ok:
        best = max(ok, key=lambda r: r["gap"])
        diag["max_gap"] = best["gap"]
        diag["max_gap_at"] = best["value"]
    return diag


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_table(spec: SweepSpec, rows, grid_step: float = 0.01) -> str:
    """Delimited table: one comment header, column names, rows, diagnostics footer."""
    curves = {}
    sources = set()
    for v in spec.values:
        n = spec.n_clients if spec.parameter == "cost" else int(v)
        if n not in curves:
            try:
                curves[n], src = spec.curve_for(n)
                sources.add(src)
            except Exception:
                curves[n] = None
    digest = config_hash({"spec": spec.to_dict(), "curves": {str(k): c for k, c in curves.items()}, "grid_step": grid_step})
    lines = [
        f"# freerider sweep parameter={spec.parameter} rewards={'+'.join(sorted(sources)) or 'none'} "
        f"config_hash={digest}",
        ",".join(COLUMNS),
    ]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in COLUMNS))
    for k, v in diagnostics(spec, rows).items():
        lines.append(f"# {k}={_fmt(v)}")
    return "\n".join(lines) + "\n"
