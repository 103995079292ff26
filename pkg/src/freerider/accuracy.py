"""Accuracy tables: the reward source for the game.

A table maps a participant count (``by_count``) or a participant-set bitmask
(``by_subset``) to the global model's test accuracy.  Tables come from a
parametric curve or from the FL simulation in :mod:`freerider.fl`, and are
persisted as JSON so games can be solved without re-training.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

FORMAT = "freerider-accuracy-table/1"
MODES = ("by_count", "by_subset")


def config_hash(config) -> str:
    """Short stable digest of a JSON-serializable config."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class AccuracyTable:
    mode: str
    n_clients: int
    entries: dict
    std: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.entries = {int(k): float(v) for k, v in self.entries.items()}
        self.std = {int(k): float(v) for k, v in self.std.items()}
        for k, v in self.entries.items():
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"accuracy {v!r} for key {k} outside [0, 1]")
        if self.mode == "by_count":
            missing = [k for k in range(self.n_clients + 1) if k not in self.entries]
            if missing:
                raise ValueError(f"by_count table is missing counts {missing}")

    def curve(self) -> list:
        """A(0..N) for a by_count table."""
        if self.mode != "by_count":
            raise ValueError("curve() needs a by_count table")
        return [self.entries[k] for k in range(self.n_clients + 1)]

    def to_dict(self) -> dict:
        header = {
            "format": FORMAT,
            "mode": self.mode,
            "n_clients": self.n_clients,
        }
        header.update(self.metadata)
        rows = [
            {"key": k, "accuracy": self.entries[k], "std": self.std.get(k, 0.0)}
            for k in sorted(self.entries)
        ]
        return {"header": header, "rows": rows}

    @classmethod
    def from_dict(cls, data: dict, source="<table>") -> "AccuracyTable":
        try:
            header = dict(data["header"])
            rows = data["rows"]
            mode = header.pop("mode")
            n = int(header.pop("n_clients"))
            header.pop("format", None)
            entries = {int(r["key"]): float(r["accuracy"]) for r in rows}
            std = {int(r["key"]): float(r.get("std", 0.0)) for r in rows}
            return cls(mode, n, entries, std, header)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid accuracy table: {exc}", source) from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "AccuracyTable":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
        except OSError as exc:
            raise ConfigError(str(exc), str(path)) from None
        return cls.from_dict(data, str(path))


def parametric_curve(spec) -> AccuracyTable:
    """Wrap explicit accuracies as a by_count table.

    ``spec`` is either a plain list A(0), A(1), ... or a list of (k, accuracy)
    pairs whose counts must run contiguously from 0.
    """
    spec = list(spec)
    if not spec:
        raise ValueError("empty accuracy specification")
    if all(isinstance(s, (tuple, list)) for s in spec):
        pairs = sorted((int(k), float(a)) for k, a in spec)
    else:
        pairs = list(enumerate(float(a) for a in spec))
    ks = [k for k, _ in pairs]
    if ks != list(range(len(ks))):
        raise ValueError(f"participant counts must be contiguous from 0, got {ks}")
    return AccuracyTable(
        "by_count",
        len(pairs) - 1,
        dict(pairs),
        metadata={"source": "parametric", "config_hash": config_hash([a for _, a in pairs])},
    )


def saturating_curve(n_clients: int, a0: float, a_max: float, gamma: float) -> AccuracyTable:
    """A(k) = a_max - (a_max - a0) * gamma**k for k = 0..n_clients."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    if not (0.0 <= a0 <= a_max <= 1.0):
        raise ValueError("need 0 <= a0 <= a_max <= 1")
    values = [a_max - (a_max - a0) * math.pow(gamma, k) for k in range(n_clients + 1)]
    params = {"family": "saturating", "a0": a0, "a_max": a_max, "gamma": gamma}
    return AccuracyTable(
        "by_count",
        n_clients,
        dict(enumerate(values)),
        metadata={"source": "parametric", **params, "config_hash": config_hash(params)},
    )
