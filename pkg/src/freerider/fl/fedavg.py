"""FedAvg over the synthetic signal task, and accuracy tables built from it."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..accuracy import AccuracyTable, config_hash
from ..errors import InstanceTooLargeError
from ..game import subset_mask
from .model import PARAM_NAMES, ClassifierModel, OptimizerConfig, init_classifier, train_local
from .signals import ChannelConfig, generate_dataset

WORKERS_ENV = "FREERIDER_WORKERS"
MAX_SUBSET_CLIENTS = 8


@dataclass(frozen=True)
class FLConfig:
    epochs: int = 100  # FedAvg rounds
    local_epochs: int = 1
    seeds: tuple = (0, 1, 2, 3, 4)
    samples_per_client: int = 1000
    hidden: int = 32
    dropout: float = 0.1
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    max_steps: int = 5_000_000  # cap on total mini-batch updates per table

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "local_epochs": self.local_epochs,
            "seeds": list(self.seeds),
            "samples_per_client": self.samples_per_client,
            "hidden": self.hidden,
            "dropout": self.dropout,
            "optimizer": self.optimizer.to_dict(),
            "channel": self.channel.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FLConfig":
        data = dict(data)
        opt = OptimizerConfig(**data.pop("optimizer", {}))
        chan = data.pop("channel", {})
        if "snr_db_range" in chan:
            chan["snr_db_range"] = tuple(chan["snr_db_range"])
        channel = ChannelConfig(**chan)
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        return cls(optimizer=opt, channel=channel, **data)


def average_models(models) -> ClassifierModel:
    """Unweighted parameter mean, in participant order."""
    models = list(models)
    params = {k: np.mean(np.stack([m.params[k] for m in models]), axis=0) for k in PARAM_NAMES}
    return ClassifierModel(params, models[0].dropout)


def _check_shapes(global_model, models):
    for m in models:
        if m.shapes != global_model.shapes:
            raise ValueError(f"model shapes {m.shapes} do not match global {global_model.shapes}")


def fedavg_round(
    global_model: ClassifierModel,
    participants,
    client_data,
    epochs_local: int = 1,
    optimizer: OptimizerConfig | None = None,
    client_seeds=None,
) -> ClassifierModel:
    """One FedAvg round: participants train from the global weights, the server averages.

    ``client_data`` maps client id to a :class:`SignalDataset`;
    ``client_seeds`` maps client id to its local-training seed.
    """
    participants = sorted(participants)
    if not participants:
        return global_model.copy()
    client_seeds = client_seeds or {}
    local = []
    for i in participants:
        data = client_data[i]
        x = data.x_train
        if x.shape[1] != global_model.params["W1"].shape[0]:
            raise ValueError(f"client {i} data width {x.shape[1]} does not match the model")
        local.append(
            train_local(global_model, x, data.y_train, epochs_local, optimizer, seed=client_seeds.get(i, i))
        )
    _check_shapes(global_model, local)
    return average_models(local)


def _round_seeds(seed: int, rnd: int, participants) -> dict:
    return {i: np.random.SeedSequence([int(seed), rnd, i]) for i in participants}


def initial_model(config: FLConfig, seed: int) -> ClassifierModel:
    rng = np.random.default_rng([int(seed), 1_000_003])
    return init_classifier(rng, 32, config.hidden, 2, config.dropout)


def run_fedavg(participants, datasets, config: FLConfig, seed: int) -> ClassifierModel:
    model = initial_model(config, seed)
    client_data = dict(enumerate(datasets))
    for rnd in range(config.epochs):
        model = fedavg_round(
            model,
            participants,
            client_data,
            config.local_epochs,
            config.optimizer,
            _round_seeds(seed, rnd, participants),
        )
    return model


def pooled_test(datasets):
    x = np.concatenate([d.x_test for d in datasets])
    y = np.concatenate([d.y_test for d in datasets])
    return x, y


def _entry_accuracy(args) -> float:
    participants, n_clients, config, seed = args
    datasets = generate_dataset(config.channel, n_clients, config.samples_per_client, seed)
    model = run_fedavg(participants, datasets, config, seed)
    x, y = pooled_test(datasets)
    return model.accuracy(x, y)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _entries(n_clients: int, mode: str):
    if mode == "by_count":
        return [(k, tuple(range(k))) for k in range(n_clients + 1)]
    if mode == "by_subset":
        out = []
        for mask in range(1 << n_clients):
            members = tuple(j for j in range(n_clients) if mask >> j & 1)
            out.append((subset_mask(members), members))
        return out
    raise ValueError(f"unknown mode {mode!r}")


def estimate_steps(n_clients: int, mode: str, config: FLConfig) -> int:
    n_train = config.samples_per_client - int(round(0.2 * (config.samples_per_client // 2))) * 2
    batches = -(-n_train // config.optimizer.batch_size)
    per_client_round = config.local_epochs * batches
    total = sum(len(members) for _, members in _entries(n_clients, mode))
    return total * config.epochs * per_client_round * len(config.seeds)


def build_accuracy_table(n_clients: int, mode: str = "by_count", config: FLConfig | None = None) -> AccuracyTable:
    """Train FedAvg once per (participant configuration, seed) and tabulate accuracy.

    by_count runs clients 0..k-1 for each count k; by_subset trains every
    subset (N <= 8).  Accuracy is measured on the pooled test splits of all
    N clients; the empty configuration reports the untrained model.
    """
    config = config or FLConfig()
    if mode == "by_subset" and n_clients > MAX_SUBSET_CLIENTS:
        raise InstanceTooLargeError(
            f"by_subset tables need 2^N trainings; limited to N <= {MAX_SUBSET_CLIENTS}",
            estimated_cost=estimate_steps(n_clients, "by_subset", config),
        )
    steps = estimate_steps(n_clients, mode, config)
    if steps > config.max_steps:
        raise InstanceTooLargeError(
            f"table needs about {steps:,} mini-batch updates (cap {config.max_steps:,})", estimated_cost=steps
        )

    entries = _entries(n_clients, mode)
    tasks = [(members, n_clients, config, seed) for _, members in entries for seed in config.seeds]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_entry_accuracy, tasks))
    else:
        results = [_entry_accuracy(t) for t in tasks]

    n_seeds = len(config.seeds)
    acc, std = {}, {}
    for e, (key, _) in enumerate(entries):
        values = np.array(results[e * n_seeds : (e + 1) * n_seeds])
        acc[key] = float(values.mean())
        std[key] = float(values.std())
    cfg = config.to_dict()
    metadata = {
        "source": "fedavg",
        "epochs": config.epochs,
        "seeds": list(config.seeds),
        "participants_rule": "first_k" if mode == "by_count" else "subset_bitmask",
        "fl_config": cfg,
        "config_hash": config_hash({"n_clients": n_clients, "mode": mode, **cfg}),
    }
    return AccuracyTable(mode, n_clients, acc, std, metadata)
