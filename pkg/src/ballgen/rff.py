"""Explicit random Fourier feature map with a learnable diagonal kernel scale.

A point x in R^d is mapped to the 2D-dimensional vector

    phi(x) = D**-0.5 * [cos(e_i . (s * x)), sin(e_i . (s * x))]  for i = 1..D

where the directions e_i are drawn once from a standard normal and then
frozen, and s = exp(log_scale) is the per-dimension scale of the Gaussian
kernel exp(-0.5 * ||s * (x - x')||**2) that the inner product
phi(x) . phi(x') approximates.  Moving the scale inside the projection
(instead of sampling frequencies from N(0, diag(s**2)) directly) makes the
map a differentiable function of log_scale, so the kernel can be trained by
gradient descent alongside everything else.  Every mapped point lies on the
unit hypersphere since cos**2 + sin**2 = 1 per direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FeatureMap",
    "BatchFeatures",
    "BijectionReport",
    "build_feature_map",
    "map_point",
    "map_points",
    "batch_features",
    "approx_kernel",
    "gaussian_kernel",
    "map_jacobian_wrt_input",
    "map_gradient_wrt_log_scale",
    "batch_input_vjp",
    "batch_log_scale_vjp",
    "check_bijection_conditions",
]


@dataclass
class FeatureMap:
    """Frozen random directions plus the trainable log kernel scale."""

    dims_in: int
    num_features: int
    directions: np.ndarray  # (num_features, dims_in), frozen after construction
    log_scale: np.ndarray   # (dims_in,), the only trainable field
    seed: int

    @property
    def out_dim(self) -> int:
        return 2 * self.num_features

    def scale(self) -> np.ndarray:
        """Per-dimension kernel scale s = exp(log_scale); positive by construction."""
        s = np.exp(self.log_scale)
        if not np.all(np.isfinite(s)):
            raise FloatingPointError("kernel scale is not finite")
        return s


def build_feature_map(dims_in, num_features, seed, initial_log_scale=None) -> FeatureMap:
    """Draw the frozen directions from the seeded generator and set the scale.

    `initial_log_scale` may be a scalar (broadcast) or a length-`dims_in`
    vector; omitted means zeros, i.e. a unit kernel scale.
    """
    if dims_in < 1:
        raise ValueError("dims_in must be >= 1")
    if num_features < 1:
        raise ValueError("num_features must be >= 1")
    if initial_log_scale is None:
        log_scale = np.zeros(dims_in)
    else:
        log_scale = np.asarray(initial_log_scale, dtype=float)
        if log_scale.ndim == 0:
            log_scale = np.full(dims_in, float(log_scale))
        elif log_scale.shape != (dims_in,):
            raise ValueError(
                f"initial_log_scale has shape {log_scale.shape}, expected ({dims_in},)"
            )
        else:
            log_scale = log_scale.copy()
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((num_features, dims_in))
    return FeatureMap(int(dims_in), int(num_features), directions, log_scale, int(seed))


def _as_input(fm: FeatureMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (fm.dims_in,):
        raise ValueError(f"expected input of shape ({fm.dims_in},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    return x


def map_point(fm: FeatureMap, x) -> np.ndarray:
    """Map one point to its feature vector: D cosines followed by D sines."""
    x = _as_input(fm, x)
    t = fm.directions @ (fm.scale() * x)
    return np.concatenate([np.cos(t), np.sin(t)]) / np.sqrt(fm.num_features)


@dataclass
class BatchFeatures:
    """Mapped batch plus the cached trig terms the pullbacks reuse."""

    phi: np.ndarray     # (n, 2D)
    cos_t: np.ndarray   # (n, D)
    sin_t: np.ndarray   # (n, D)


def batch_features(fm: FeatureMap, points) -> BatchFeatures:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != fm.dims_in:
        raise ValueError(f"expected points of shape (n, {fm.dims_in}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points contain non-finite entries")
    t = (X * fm.scale()) @ fm.directions.T
    cos_t = np.cos(t)
    sin_t = np.sin(t)
    phi = np.concatenate([cos_t, sin_t], axis=1) / np.sqrt(fm.num_features)
    return BatchFeatures(phi, cos_t, sin_t)


def map_points(fm: FeatureMap, points) -> np.ndarray:
    """Map a (n, d) batch to (n, 2D) features."""
    return batch_features(fm, points).phi


def approx_kernel(fm: FeatureMap, x, x2) -> float:
    """Inner product of two mapped points; a Monte-Carlo Gaussian kernel estimate."""
    return float(map_point(fm, x) @ map_point(fm, x2))


def gaussian_kernel(u, scale) -> np.ndarray:
    """Closed-form kernel exp(-0.5 * ||scale * u||**2) for displacement(s) u."""
    u = np.asarray(u, dtype=float)
    z = u * scale
    return np.exp(-0.5 * np.sum(z * z, axis=-1))


def map_jacobian_wrt_input(fm: FeatureMap, x) -> np.ndarray:
    """(2D, d) Jacobian of map_point at x."""
    x = _as_input(fm, x)
    w = fm.directions * fm.scale()  # row i is e_i^T with the scale folded in
    t = w @ x
    root_d = np.sqrt(fm.num_features)
    return np.vstack([-np.sin(t)[:, None] * w, np.cos(t)[:, None] * w]) / root_d


def map_gradient_wrt_log_scale(fm: FeatureMap, x) -> np.ndarray:
    """(2D, d) matrix of feature derivatives in the log scale coordinates.

    The phase e_i . (s * x) has derivative E[i, j] * s[j] * x[j] in
    log_scale[j], so a zero input yields the zero matrix.
    """
    x = _as_input(fm, x)
    s = fm.scale()
    t = fm.directions @ (s * x)
    g = fm.directions * (s * x)  # d(phase_i) / d(log_scale_j)
    root_d = np.sqrt(fm.num_features)
    return np.vstack([-np.sin(t)[:, None] * g, np.cos(t)[:, None] * g]) / root_d


def _phase_pullback(fm: FeatureMap, bf: BatchFeatures, d_phi) -> np.ndarray:
    # A[n, j] = sum_i (d_sin[n,i] * cos_t[n,i] - d_cos[n,i] * sin_t[n,i]) / sqrt(D) * E[i,j]
    D = fm.num_features
    d_phi = np.asarray(d_phi, dtype=float)
    inner = (d_phi[:, D:] * bf.cos_t - d_phi[:, :D] * bf.sin_t) / np.sqrt(D)
    return inner @ fm.directions


def batch_input_vjp(fm: FeatureMap, bf: BatchFeatures, d_phi) -> np.ndarray:
    """Gradient in X of sum_n <d_phi[n], phi(X[n])>, returned per point as (n, d)."""
    return _phase_pullback(fm, bf, d_phi) * fm.scale()


def batch_log_scale_vjp(fm: FeatureMap, points, bf: BatchFeatures, d_phi) -> np.ndarray:
    """Gradient in log_scale of sum_n <d_phi[n], phi(X[n])>, shape (d,)."""
    X = np.asarray(points, dtype=float)
    return np.sum(X * _phase_pullback(fm, bf, d_phi), axis=0) * fm.scale()


@dataclass
class BijectionReport:
    rank_ok: bool
    contraction_ok: bool
    product_value: float
    rank: int


def check_bijection_conditions(fm: FeatureMap, data_diameter: float) -> BijectionReport:
    """Report whether the map is invertible on a data region of the given diameter.

    Invertibility needs the frozen directions to span R^d and the total phase
    swing ||diag(s)||_F * diameter * max_i ||e_i|| to stay below 2*pi.  The
    rank is computed from singular values with a 1e-10 relative cutoff.
    """
    if data_diameter < 0:
        raise ValueError("data_diameter must be >= 0")
    sv = np.linalg.svd(fm.directions, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(sv > 1e-10 * sv[0]))
    scale_frob = float(np.sqrt(np.sum(fm.scale() ** 2)))
    max_direction = float(np.max(np.linalg.norm(fm.directions, axis=1)))
    product = scale_frob * float(data_diameter) * max_direction
    return BijectionReport(
        rank_ok=bool(rank == fm.dims_in),
        contraction_ok=bool(product < 2.0 * np.pi),
        product_value=product,
        rank=rank,
    )
