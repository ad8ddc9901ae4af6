"""Adam updates over named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss or gradient."""


@dataclass
class AdamState:
    """First/second moment accumulators, created lazily per parameter name."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict, lr: float) -> dict:
    """One bias-corrected Adam update, applied in place to the parameter arrays."""
    if set(params) != set(grads):
        raise ValueError("params and grads disagree on keys")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    for key, p in params.items():
        g = np.asarray(grads[key], dtype=float)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {key!r}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {key!r}")
        if key not in state.m:
            state.m[key] = np.zeros_like(p)
            state.v[key] = np.zeros_like(p)
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1 ** state.step)
        v_hat = v / (1.0 - b2 ** state.step)
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
