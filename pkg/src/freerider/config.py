"""JSON game files.

Schema::

    {
      "n_clients": 2,
      "costs": [0.3, 0.3],               # or "cost": 0.3 for a common cost
      "rewards": {
        "kind": "symmetric",
        "curve": [0.5, 0.8, 0.9]          # A(0..N)
      }
    }

``rewards.kind`` is ``"symmetric"`` (with ``curve``) or ``"subset"`` (with
``table``: a list of ``{"client", "role", "participants", "value"}``
records, roles ``"F"``/``"P"``, 0-based client ids).  Either kind may instead
name an accuracy-table file with ``"accuracy_table": "path.json"``, resolved
relative to the game file.  Serialization always writes the inline form.
"""

from __future__ import annotations

import json
from pathlib import Path

from .accuracy import AccuracyTable
from .errors import ConfigError, FreeRiderError
from .game import GameSpec, Role, SubsetTable, SymmetricCurve, reward_table_from_accuracy


def _require(data, key, where):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", where)
    if key not in data:
        raise ConfigError(f"missing field {key!r}", where)
    return data[key]


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(exc), str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def rewards_from_dict(data, n_clients, where="rewards", base_dir=None):
    kind = _require(data, "kind", where)
    if "accuracy_table" in data:
        table_path = Path(data["accuracy_table"])
        if base_dir is not None and not table_path.is_absolute():
            table_path = Path(base_dir) / table_path
        table = AccuracyTable.load(table_path)
        try:
            model = reward_table_from_accuracy(table, n_clients)
        except Exception as exc:
            raise ConfigError(str(exc), f"{where}.accuracy_table") from None
        expected = SymmetricCurve if kind == "symmetric" else SubsetTable
        if not isinstance(model, expected):
            raise ConfigError(f"table mode {table.mode!r} does not match kind {kind!r}", where)
        return model
    if kind == "symmetric":
        curve = _require(data, "curve", where)
        try:
            return SymmetricCurve(tuple(float(a) for a in curve))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), f"{where}.curve") from None
    if kind == "subset":
        records = _require(data, "table", where)
        values = {}
        for n, rec in enumerate(records):
            loc = f"{where}.table[{n}]"
            try:
                key = (int(rec["client"]), Role.parse(rec["role"]), frozenset(int(j) for j in rec["participants"]))
                values[key] = float(rec["value"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad record: {exc}", loc) from None
        try:
            return SubsetTable(n_clients, values)
        except Exception as exc:
            raise ConfigError(str(exc), f"{where}.table") from None
    raise ConfigError(f"unknown rewards kind {kind!r}", f"{where}.kind")


def game_from_dict(data, where="<game>", base_dir=None) -> GameSpec:
    n = _require(data, "n_clients", where)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("n_clients must be a positive integer", f"{where}.n_clients")
    if "costs" in data:
        costs = data["costs"]
        if not isinstance(costs, list):
            raise ConfigError("costs must be an array", f"{where}.costs")
    elif "cost" in data:
        costs = [data["cost"]] * n
    else:
        raise ConfigError("missing field 'costs'", where)
    rewards = rewards_from_dict(_require(data, "rewards", where), n, f"{where}.rewards", base_dir)
    try:
        return GameSpec(n, tuple(costs), rewards)
    except (TypeError, ValueError, FreeRiderError) as exc:
        raise ConfigError(str(exc), where) from None


def game_to_dict(game: GameSpec) -> dict:
    rewards = game.rewards
    if isinstance(rewards, SymmetricCurve):
        rdict = {"kind": "symmetric", "curve": list(rewards.accuracy)}
    else:
        table = [
            {"client": i, "role": role.value, "participants": sorted(pset), "value": v}
            for (i, role, pset), v in sorted(
                rewards.values.items(), key=lambda kv: (kv[0][0], kv[0][1].value, sorted(kv[0][2]))
            )
        ]
        rdict = {"kind": "subset", "table": table}
    return {"n_clients": game.n_clients, "costs": list(game.costs), "rewards": rdict}


def dumps_game(game: GameSpec) -> str:
    return json.dumps(game_to_dict(game), indent=2) + "\n"


def loads_game(text: str, where="<string>") -> GameSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"{where}:{exc.lineno}:{exc.colno}") from None
    return game_from_dict(data, where)


def load_game(path) -> GameSpec:
    path = Path(path)
    return game_from_dict(read_json(path), str(path), base_dir=path.parent)


def save_game(game: GameSpec, path) -> None:
    Path(path).write_text(dumps_game(game))
