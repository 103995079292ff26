"""Embedded federated-learning simulation used as a reward oracle."""

from .fedavg import FLConfig, average_models, build_accuracy_table, fedavg_round, run_fedavg
from .model import ClassifierModel, OptimizerConfig, init_classifier, loss_and_grads, train_local
from .signals import ChannelConfig, SignalDataset, generate_dataset

__all__ = [
    "ChannelConfig",
    "ClassifierModel",
    "FLConfig",
    "OptimizerConfig",
    "SignalDataset",
    "average_models",
    "build_accuracy_table",
    "fedavg_round",
    "generate_dataset",
    "init_classifier",
    "loss_and_grads",
    "run_fedavg",
    "train_local",
]
