"""Fully connected ReLU regressor with inverted dropout, MEDL loss and explicit backprop."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ValidationError

EPS_SAFE = 1e-12
MAX_HIDDEN_LAYERS = 15
MAX_WIDTH_AFTER_FIRST_HIDDEN = 128
BOTTLENECK = (20, 40)


class ArchitectureError(ValidationError):
    pass


@dataclass(frozen=True)
class Architecture:
    """Three blocks: a narrowing input block into a bottleneck, identical center
    layers, and a positioning block ending in the 2 output coordinates.

    ``input_block[0]`` is the feature width. ``dropout`` is a single probability
    for every hidden layer or one value per hidden layer; the output layer never
    drops. ``constrained=False`` skips the block-shape rules (used for tiny test
    nets); structural checks still apply.
    """

    input_block: tuple[int, ...] = (384, 128, 32)
    center_count: int = 2
    center_width: int = 32
    positioning_block: tuple[int, ...] = (16, 2)
    dropout: float | tuple[float, ...] = 0.1
    constrained: bool = True

    @classmethod
    def from_widths(cls, widths, dropout=0.0) -> "Architecture":
        widths = tuple(int(w) for w in widths)
        return cls(widths[:-1], 0, 0, widths[-1:], dropout, constrained=False)

    @property
    def widths(self) -> tuple[int, ...]:
        return (
            tuple(self.input_block)
            + (self.center_width,) * self.center_count
            + tuple(self.positioning_block)
        )

    @property
    def n_hidden(self) -> int:
        return len(self.widths) - 2

    @property
    def dropout_per_layer(self) -> tuple[float, ...]:
        if isinstance(self.dropout, (int, float)):
            return (float(self.dropout),) * self.n_hidden
        return tuple(float(p) for p in self.dropout)

    def validate(self) -> "Architecture":
        w = self.widths
        if len(w) < 2 or any(x < 1 for x in w):
            raise ArchitectureError("need at least an input and an output layer, all widths >= 1")
        if w[-1] != 2:
            raise ArchitectureError("last width must be 2")
        p = self.dropout_per_layer
        if len(p) != self.n_hidden:
            raise ArchitectureError(f"dropout has {len(p)} entries for {self.n_hidden} hidden layers")
        if any(not 0.0 <= x < 1.0 for x in p):
            raise ArchitectureError("dropout probabilities must lie in [0, 1)")
        if not self.constrained:
            return self
        hidden = w[1:-1]
        if len(hidden) > MAX_HIDDEN_LAYERS:
            raise ArchitectureError(f"at most {MAX_HIDDEN_LAYERS} hidden layers, got {len(hidden)}")
        ib = tuple(self.input_block)
        if len(ib) < 2 or any(b >= a for a, b in zip(ib, ib[1:])):
            raise ArchitectureError("input block must be strictly decreasing and have >= 2 widths")
        lo, hi = BOTTLENECK
        if not lo <= ib[-1] <= hi:
            raise ArchitectureError(f"input block must end in a bottleneck of {lo}-{hi} units")
        if self.center_count < 0 or (self.center_count and not lo <= self.center_width <= hi):
            raise ArchitectureError(f"center block width must lie in {lo}-{hi}")
        if any(x > MAX_WIDTH_AFTER_FIRST_HIDDEN for x in hidden[1:]):
            raise ArchitectureError(
                f"layers after the first hidden layer are limited to {MAX_WIDTH_AFTER_FIRST_HIDDEN} units"
            )
        pb = tuple(self.positioning_block)
        narrowest = self.center_width if self.center_count else ib[-1]
        if pb[0] > narrowest or any(b > a for a, b in zip(pb, pb[1:])):
            raise ArchitectureError("positioning block must be nonincreasing from the bottleneck")
        return self


@dataclass(frozen=True, eq=False)
class NetworkState:
    arch: Architecture
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    m_w: tuple[np.ndarray, ...]
    v_w: tuple[np.ndarray, ...]
    m_b: tuple[np.ndarray, ...]
    v_b: tuple[np.ndarray, ...]
    step: int = 0
    seed: int = 0
    # predictions are offset + scale * (last affine layer); fixed, not trained
    output_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    output_scale: float = 1.0

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    def params(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)

    def with_params(self, weights, biases) -> "NetworkState":
        return replace(self, weights=tuple(weights), biases=tuple(biases))

    def equals(self, other: "NetworkState") -> bool:
        arrays = lambda s: [*s.weights, *s.biases, *s.m_w, *s.v_w, *s.m_b, *s.v_b, s.output_offset]
        return (
            self.arch == other.arch
            and self.step == other.step
            and self.seed == other.seed
            and self.output_scale == other.output_scale
            and all(np.array_equal(a, b) for a, b in zip(arrays(self), arrays(other)))
        )


def init_network(arch: Architecture, seed: int = 0, output_offset=(0.0, 0.0), output_scale: float = 1.0) -> NetworkState:
    """Fan-in scaled uniform weights, zero biases, zero ADAM moments."""
    arch.validate()
    rng = np.random.default_rng([seed, 0x1417])
    w = arch.widths
    weights, biases = [], []
    for fan_in, fan_out in zip(w[:-1], w[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    zeros = lambda arrs: tuple(np.zeros_like(a) for a in arrs)
    if output_scale <= 0:
        raise ValidationError("output_scale must be > 0")
    return NetworkState(
        arch,
        tuple(weights),
        tuple(biases),
        zeros(weights),
        zeros(weights),
        zeros(biases),
        zeros(biases),
        step=0,
        seed=seed,
        output_offset=np.asarray(output_offset, dtype=float).copy(),
        output_scale=float(output_scale),
    )


def dropout_masks(net: NetworkState, n: int, rng: np.random.Generator) -> list[np.ndarray | None]:
    """Inverted-dropout masks per hidden layer: kept units scaled by 1/(1-p)."""
    masks = []
    for width, p in zip(net.arch.widths[1:-1], net.arch.dropout_per_layer):
        if p == 0:
            masks.append(None)
        else:
            masks.append((rng.random((n, width)) >= p) / (1.0 - p))
    return masks


def _check_input(net: NetworkState, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_width:
        raise ValidationError(f"input width {x.shape[-1]} does not match network input {net.input_width}")
    return x


def forward(net: NetworkState, batch, mode: str = "eval", rng=None, masks=None, return_cache: bool = False):
    """Predictions (N, 2).

    ``mode="train"`` applies dropout, with ``masks`` if given or fresh masks
    drawn from ``rng``; ``mode="eval"`` never drops.
    """
    x = _check_input(net, batch)
    if mode not in ("train", "eval"):
        raise ValidationError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and masks is None:
        if rng is None:
            rng = np.random.default_rng([net.seed, net.step, 0xD80])
        masks = dropout_masks(net, len(x), rng)
    if mode == "eval":
        masks = None
    acts = [x]
    pre = []
    h = x
    last = net.n_layers - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        if k == last:
            h = z
            break
        h = np.maximum(z, 0.0)
        if masks is not None and masks[k] is not None:
            h = h * masks[k]
        acts.append(h)
    out = net.output_offset + net.output_scale * h
    if return_cache:
        return out, (acts, pre, masks)
    return out


def medl_loss(pred, target, kind: str = "euclidean") -> tuple[float, np.ndarray]:
    """Mean per-row distance and its gradient w.r.t. ``pred``.

    ``kind="euclidean"`` (default) averages the 2-D Euclidean distance;
    ``kind="l1"`` averages |dx| + |dy|.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"pred shape {pred.shape} != target shape {target.shape}")
    n = len(pred)
    if n == 0:
        raise ValidationError("loss over an empty batch")
    delta = pred - target
    if kind == "euclidean":
        dist = np.hypot(delta[:, 0], delta[:, 1])
        grad = delta / (dist[:, None] + EPS_SAFE) / n
        return float(dist.mean()), grad
    if kind == "l1":
        return float(np.abs(delta).sum(axis=1).mean()), np.sign(delta) / n
    raise ValidationError(f"unknown loss kind {kind!r}")


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def all(self) -> list[np.ndarray]:
        return self.weights + self.biases


def backward(net: NetworkState, batch, targets, masks=None, loss: str = "euclidean") -> tuple[float, Gradients]:
    """Loss and exact gradients for every weight and bias.

    ``masks`` are the dropout masks of the paired forward pass (None: no dropout).
    """
    mode = "train" if masks is not None else "eval"
    pred, (acts, pre, masks) = forward(net, batch, mode=mode, masks=masks, return_cache=True)
    value, g = medl_loss(pred, targets, loss)
    g = g * net.output_scale
    gw = [None] * net.n_layers
    gb = [None] * net.n_layers
    for k in range(net.n_layers - 1, -1, -1):
        gw[k] = acts[k].T @ g
        gb[k] = g.sum(axis=0)
        if k == 0:
            break
        g = g @ net.weights[k].T
        if masks is not None and masks[k - 1] is not None:
            g = g * masks[k - 1]
        g = g * (pre[k - 1] > 0)
    return value, Gradients(gw, gb)
