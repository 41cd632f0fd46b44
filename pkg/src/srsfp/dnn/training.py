"""Minibatch training loop with per-epoch target noise and best-on-validation selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, ValidationError
from ..pipeline.gnss import inject_target_noise
from .network import NetworkState, backward, dropout_masks, forward
from .optim import adam_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 100
    target_noise_sigma_m: float = 3.5
    seed: int = 0
    loss: str = "euclidean"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValidationError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be > 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if self.target_noise_sigma_m < 0:
            raise ValidationError("target_noise_sigma_m must be >= 0")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        if self.loss not in ("euclidean", "l1"):
            raise ValidationError("loss must be 'euclidean' or 'l1'")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_medl: float


def evaluate_medl(net: NetworkState, features, targets, batch_size: int = 4096) -> float:
    """Eval-mode mean Euclidean distance over a whole split."""
    total = 0.0
    n = len(features)
    for k in range(0, n, batch_size):
        pred = forward(net, features[k : k + batch_size], mode="eval")
        d = np.sqrt(np.sum((pred - targets[k : k + batch_size]) ** 2, axis=1))
        total += d.sum()
    return total / n


def train(net: NetworkState, train_ds, val_ds, config: TrainConfig, on_epoch=None):
    """Train and return ``(best_state, history)``.

    Each epoch shuffles with a seeded generator, adds fresh N(0, sigma^2) noise to
    the training targets, and runs minibatch ADAM. The state with the lowest
    validation MEDL (noise-free, eval mode) is returned. Raises DivergenceError
    if the loss becomes non-finite; the error carries ``last_good``.
    """
    if train_ds.width != val_ds.width or train_ds.width != net.input_width:
        raise ValidationError(
            f"feature widths differ: train {train_ds.width}, val {val_ds.width}, net {net.input_width}"
        )
    history: list[EpochRecord] = []
    best, best_val = net, np.inf
    x, y = train_ds.features, train_ds.targets
    n = len(x)
    bs = config.batch_size
    for epoch in range(1, config.epochs + 1):
        rng = np.random.default_rng([config.seed, epoch, 0x5EED])
        order = rng.permutation(n)
        noisy = inject_target_noise(y, config.target_noise_sigma_m, config.seed, epoch)
        loss_sum = 0.0
        for k in range(0, n, bs):
            idx = order[k : k + bs]
            xb = x[idx]
            masks = dropout_masks(net, len(idx), rng)
            loss, grads = backward(net, xb, noisy[idx], masks=masks, loss=config.loss)
            if not np.isfinite(loss):
                err = DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch}, step {net.step}, batch start {k}"
                )
                err.last_good = best
                err.history = history
                raise err
            loss_sum += loss * len(idx)
            net = adam_step(net, grads, config)
        val = evaluate_medl(net, val_ds.features, val_ds.targets)
        if not np.isfinite(val):
            err = DivergenceError(f"non-finite validation MEDL at epoch {epoch}")
            err.last_good = best
            err.history = history
            raise err
        rec = EpochRecord(epoch, loss_sum / n, float(val))
        history.append(rec)
        log.info("epoch %d train_loss %.4f val_medl %.4f", epoch, rec.train_loss, rec.val_medl)
        if on_epoch is not None:
            on_epoch(rec)
        if val < best_val:
            best, best_val = net, val
    return best, history

