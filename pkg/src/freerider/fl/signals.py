"""Synthetic BPSK/QPSK I/Q samples over an AWGN channel with phase jitter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BPSK, QPSK = 0, 1
CLASS_NAMES = ("BPSK", "QPSK")
N_SYMBOLS = 16


@dataclass(frozen=True)
class ChannelConfig:
    snr_db_range: tuple = (0.0, 10.0)
    phase_jitter_bound: float = math.pi / 30
    phase_update_period: int = 20
    seed: int = 0

    def __post_init__(self):
        lo, hi = (float(x) for x in self.snr_db_range)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise ValueError(f"invalid SNR range {self.snr_db_range!r}")
        if not self.phase_jitter_bound >= 0:
            raise ValueError("phase_jitter_bound must be >= 0")
        if int(self.phase_update_period) < 1:
            raise ValueError("phase_update_period must be >= 1")
        object.__setattr__(self, "snr_db_range", (lo, hi))
        object.__setattr__(self, "phase_update_period", int(self.phase_update_period))

    def to_dict(self) -> dict:
        return {
            "snr_db_range": list(self.snr_db_range),
            "phase_jitter_bound": self.phase_jitter_bound,
            "phase_update_period": self.phase_update_period,
        }


@dataclass(frozen=True)
class SignalDataset:
    samples: np.ndarray  # (n, 2, 16): I row, Q row
    labels: np.ndarray  # (n,) 0 = BPSK, 1 = QPSK
    train_idx: np.ndarray
    test_idx: np.ndarray
    snr_db: np.ndarray
    phases: np.ndarray

    @property
    def x_train(self):
        return self.samples[self.train_idx].reshape(len(self.train_idx), -1)

    @property
    def y_train(self):
        return self.labels[self.train_idx]

    @property
    def x_test(self):
        return self.samples[self.test_idx].reshape(len(self.test_idx), -1)

    @property
    def y_test(self):
        return self.labels[self.test_idx]


def _symbols(rng, labels):
    n = len(labels)
    bits = rng.integers(0, 2, size=(n, 2, N_SYMBOLS))
    bpsk = (2.0 * bits[:, 0] - 1.0).astype(complex)
    qpsk = ((2.0 * bits[:, 0] - 1.0) + 1j * (2.0 * bits[:, 1] - 1.0)) / math.sqrt(2.0)
    return np.where((labels == BPSK)[:, None], bpsk, qpsk)


def _stratified_split(rng, labels, test_fraction=0.2):
    test = []
    for cls in (BPSK, QPSK):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        test.append(idx[: int(round(test_fraction * len(idx)))])
    test_idx = np.sort(np.concatenate(test))
    train_idx = np.setdiff1d(np.arange(len(labels)), test_idx)
    return train_idx, test_idx


def generate_client(config: ChannelConfig, n_samples: int, rng: np.random.Generator) -> SignalDataset:
    # equal class counts, random order
    labels = rng.permutation(np.arange(n_samples) % 2)
    symbols = _symbols(rng, labels)

    period = config.phase_update_period
    n_blocks = -(-n_samples // period)
    bound = config.phase_jitter_bound
    block_phase = rng.uniform(-bound, bound, size=n_blocks) if bound > 0 else np.zeros(n_blocks)
    phases = block_phase[np.arange(n_samples) // period]

    lo, hi = config.snr_db_range
    snr_db = rng.uniform(lo, hi, size=n_samples) if hi > lo else np.full(n_samples, lo)
    with np.errstate(over="ignore"):
        noise_std = np.sqrt(0.5 / np.power(10.0, snr_db / 10.0))  # per real component, unit symbol energy
    noise = rng.standard_normal((n_samples, N_SYMBOLS)) + 1j * rng.standard_normal((n_samples, N_SYMBOLS))
    rx = symbols * np.exp(1j * phases)[:, None] + noise_std[:, None] * noise

    samples = np.stack([rx.real, rx.imag], axis=1)
    train_idx, test_idx = _stratified_split(rng, labels)
    return SignalDataset(samples, labels, train_idx, test_idx, snr_db, phases)


def generate_dataset(
    config: ChannelConfig, n_clients: int, samples_per_client: int = 1000, seed: int | None = None
) -> list:
    """One independently drawn :class:`SignalDataset` per client; deterministic given ``seed``."""
    if n_clients < 1 or samples_per_client < 2:
        raise ValueError("need at least one client and two samples per client")
    if seed is None:
        seed = config.seed
    return [
        generate_client(config, samples_per_client, np.random.default_rng([int(seed), i]))
        for i in range(n_clients)
    ]
