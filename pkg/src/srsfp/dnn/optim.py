from __future__ import annotations

from dataclasses import replace

import numpy as np

from .network import Gradients, NetworkState


def adam_update(theta, g, m, v, t: int, lr: float, beta1: float, beta2: float, eps: float):
    """One bias-corrected ADAM update at step ``t`` (1-based). Returns (theta, m, v)."""
    m = beta1 * m + (1.0 - beta1) * g
    v = beta2 * v + (1.0 - beta2) * (g * g)
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return theta - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


def adam_step(state: NetworkState, grads: Gradients, config) -> NetworkState:
    """Return a new state after one ADAM step; ``config`` supplies lr, beta1, beta2, epsilon."""
    t = state.step + 1
    hp = (config.learning_rate, config.beta1, config.beta2, config.epsilon)
    new_w, new_mw, new_vw = [], [], []
    for w, g, m, v in zip(state.weights, grads.weights, state.m_w, state.v_w):
        w, m, v = adam_update(w, g, m, v, t, *hp)
        new_w.append(w)
        new_mw.append(m)
        new_vw.append(v)
    new_b, new_mb, new_vb = [], [], []
    for b, g, m, v in zip(state.biases, grads.biases, state.m_b, state.v_b):
        b, m, v = adam_update(b, g, m, v, t, *hp)
        new_b.append(b)
        new_mb.append(m)
        new_vb.append(v)
    return replace(
        state,
        weights=tuple(new_w),
        biases=tuple(new_b),
        m_w=tuple(new_mw),
        v_w=tuple(new_vw),
        m_b=tuple(new_mb),
        v_b=tuple(new_vb),
        step=t,
    )
