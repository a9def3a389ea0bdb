from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> tuple[dict, AdamState]:
    """One bias-corrected ADAM update (PyTorch default constants); inputs are not mutated."""
    t = state.t + 1
    new_params = params.copy() if hasattr(params, "arch") else dict(params)
    m, v = {}, {}
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {k} {p.shape}")
        m[k] = beta1 * state.m.get(k, 0.0) + (1.0 - beta1) * g
        v[k] = beta2 * state.v.get(k, 0.0) + (1.0 - beta2) * g * g
        new_params[k] = p - lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + eps)
    return new_params, AdamState(t, m, v)
