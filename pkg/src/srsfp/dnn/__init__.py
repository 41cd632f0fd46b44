"""From-scratch fully connected position regressor."""

from .checkpoint import Checkpoint, dumps_checkpoint, load_checkpoint, loads_checkpoint, save_checkpoint
from .network import (
    Architecture,
    ArchitectureError,
    Gradients,
    NetworkState,
    backward,
    dropout_masks,
    forward,
    init_network,
    medl_loss,
)
from .optim import adam_step, adam_update
from .training import EpochRecord, TrainConfig, evaluate_medl, train

__all__ = [
    "Architecture",
    "ArchitectureError",
    "Checkpoint",
    "EpochRecord",
    "Gradients",
    "NetworkState",
    "TrainConfig",
    "adam_step",
    "adam_update",
    "backward",
    "dropout_masks",
    "dumps_checkpoint",
    "evaluate_medl",
    "forward",
    "init_network",
    "load_checkpoint",
    "loads_checkpoint",
    "medl_loss",
    "save_checkpoint",
    "train",
]
