"""Multilayer perceptron generator with hand-rolled forward and backward passes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ACTIVATIONS = ("softplus", "sigmoid", "identity")
_NOISE_KINDS = ("uniform", "normal")


def softplus(x):
    # log(1 + exp(x)) without overflow; tends to x itself for large x
    return np.logaddexp(0.0, x)


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _apply(activation, pre):
    if activation == "softplus":
        return softplus(pre)
    if activation == "sigmoid":
        return sigmoid(pre)
    return pre


def _deriv(activation, pre):
    if activation == "softplus":
        return sigmoid(pre)
    if activation == "sigmoid":
        s = sigmoid(pre)
        return s * (1.0 - s)
    return np.ones_like(pre)


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)
    activation: str


@dataclass
class Generator:
    layers: list
    noise_dim: int

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[0]


@dataclass
class NoiseSpec:
    """Noise source for the generator: Unif(-1, 1) or standard normal."""

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("noise dim must be >= 1")


def build_generator(noise_dim, layer_specs, seed) -> Generator:
    """Build an MLP from (width, activation) pairs.

    Weights are drawn N(0, 1/fan_in) from the seeded generator, biases start
    at zero, so construction is deterministic per seed.
    """
    if noise_dim < 1:
        raise ValueError("noise_dim must be >= 1")
    specs = list(layer_specs)
    if not specs:
        raise ValueError("need at least one layer")
    rng = np.random.default_rng(seed)
    layers = []
    fan_in = int(noise_dim)
    for width, activation in specs:
        width = int(width)
        if width < 1:
            raise ValueError("layer width must be >= 1")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        weight = rng.standard_normal((width, fan_in)) / np.sqrt(fan_in)
        layers.append(Layer(weight, np.zeros(width), activation))
        fan_in = width
    return Generator(layers, int(noise_dim))


def forward(g: Generator, z):
    """Evaluate the generator on one noise vector or a (n, noise_dim) batch.

    Returns (output, tape); the tape records each layer's input and
    pre-activation, which is exactly what backward needs.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    x = z[None, :] if single else z
    if x.ndim != 2 or x.shape[1] != g.noise_dim:
        raise ValueError(f"expected noise of dimension {g.noise_dim}, got shape {z.shape}")
    tape = []
    for layer in g.layers:
        pre = x @ layer.weight.T + layer.bias
        if not np.all(np.isfinite(pre)):
            raise FloatingPointError("non-finite pre-activation in generator forward")
        tape.append((x, pre))
        x = _apply(layer.activation, pre)
    return (x[0] if single else x), tape


def backward(g: Generator, tape, d_out):
    """Gradients of s = <d_out, forward(z)> in every weight and bias.

    `d_out` may be per-sample (n, out_dim) for a batch tape; the result is
    one (d_weight, d_bias) pair per layer, summed over the batch in index
    order so repeated runs reduce identically.
    """
    if len(tape) != len(g.layers):
        raise ValueError("tape does not match generator depth")
    d = np.asarray(d_out, dtype=float)
    if d.ndim == 1:
        d = d[None, :]
    n, width = tape[-1][1].shape
    if d.shape != (n, width):
        raise ValueError(f"d_out shape {d_out.shape} does not match tape output ({n}, {width})")
    grads = [None] * len(g.layers)
    for k in range(len(g.layers) - 1, -1, -1):
        x_in, pre = tape[k]
        layer = g.layers[k]
        d_pre = d * _deriv(layer.activation, pre)
        grads[k] = (d_pre.T @ x_in, d_pre.sum(axis=0))
        d = d_pre @ layer.weight
    return grads


def sample_noise(spec: NoiseSpec, n, rng):
    """Draw n i.i.d. noise vectors as an (n, dim) array."""
    if n < 1:
        raise ValueError("need n >= 1")
    if spec.kind == "uniform":
        return rng.uniform(-1.0, 1.0, size=(n, spec.dim))
    return rng.standard_normal((n, spec.dim))
