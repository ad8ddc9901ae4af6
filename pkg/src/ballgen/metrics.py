"""Evaluation measures: smoothed-histogram divergence, exact 1-D transport
distance, per-mode coverage, and kernel approximation error sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rff import build_feature_map, gaussian_kernel


@dataclass
class Histogram:
    edges: np.ndarray        # (bins + 1,), strictly increasing
    mass: np.ndarray         # (bins,), sums to 1
    laplace_alpha: float

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.mass = np.asarray(self.mass, dtype=float)
        if self.edges.ndim != 1 or self.edges.size < 2 or not np.all(np.diff(self.edges) > 0):
            raise ValueError("edges must be strictly increasing with at least 2 entries")
        if self.mass.shape != (self.edges.size - 1,):
            raise ValueError("mass length must be len(edges) - 1")
        if np.any(self.mass < 0) or abs(float(self.mass.sum()) - 1.0) > 1e-12:
            raise ValueError("mass must be nonnegative and sum to 1")
        if self.laplace_alpha < 0:
            raise ValueError("laplace_alpha must be >= 0")


def build_histogram(samples, edges, laplace_alpha: float = 0.0) -> Histogram:
    """Normalized histogram with additive smoothing.

    Binning is left-inclusive; samples outside the edge range are clamped
    into the first or last bin.  With laplace_alpha > 0 every bin carries
    positive mass, which the divergence below requires.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 1:
        raise ValueError("need at least one sample")
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or not np.all(np.diff(edges) > 0):
        raise ValueError("edges must be strictly increasing with at least 2 entries")
    idx = np.searchsorted(edges, x, side="right") - 1
    idx = np.clip(idx, 0, edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1).astype(float)
    mass = counts + laplace_alpha
    mass /= mass.sum()
    return Histogram(edges, mass, float(laplace_alpha))


def equal_width_edges(lo: float, hi: float, bins: int = 100) -> np.ndarray:
    if not hi > lo:
        raise ValueError("need hi > lo")
    if bins < 1:
        raise ValueError("need bins >= 1")
    return np.linspace(float(lo), float(hi), bins + 1)


def symmetric_kl(p: Histogram, q: Histogram) -> float:
    """KL(p||q) + KL(q||p) in nats, on identical edges with smoothing applied.

    The sum of the two directed divergences is used (not halved).
    """
    if p.edges.shape != q.edges.shape or not np.array_equal(p.edges, q.edges):
        raise ValueError("histograms must share identical edges")
    if p.laplace_alpha <= 0 or q.laplace_alpha <= 0:
        raise ValueError("need laplace_alpha > 0 on both histograms")
    diff = p.mass - q.mass
    return float(np.sum(diff * (np.log(p.mass) - np.log(q.mass))))


def wasserstein_1d(a, b, rng=None) -> float:
    """Exact W1 between equal-size empirical measures on the line.

    Sorting both samples and averaging coordinate gaps is the optimal
    coupling in one dimension.  If the sizes differ the larger sample is
    subsampled without replacement using `rng`.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if a.size != b.size:
        if rng is None:
            raise ValueError("sample sizes differ; pass rng to subsample")
        if a.size > b.size:
            a = rng.choice(a, size=b.size, replace=False)
        else:
            b = rng.choice(b, size=a.size, replace=False)
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def mode_coverage(samples, modes) -> np.ndarray:
    """Fraction of samples within `radius` of each mode mean.

    `modes` is an iterable of (mean, radius, expected_weight); the expected
    weight is carried for the caller's comparison and does not enter the
    count.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    modes = list(modes)
    if not modes:
        raise ValueError("need at least one mode")
    fractions = []
    for mean, radius, _expected in modes:
        mu = np.atleast_1d(np.asarray(mean, dtype=float))
        dist = np.linalg.norm(X - mu, axis=1)
        fractions.append(float(np.mean(dist <= radius)))
    return np.asarray(fractions)


class SweepRow(NamedTuple):
    num_features: int
    max_abs_error: float
    mean_abs_error: float


def kernel_error_sweep(dims, sigma, feature_counts, n_pairs, seed) -> list:
    """Random-feature kernel error against the closed form, per feature count.

    For each D a fresh map is drawn and evaluated on the same `n_pairs`
    uniform pairs from [-1, 1]^dims.  `sigma` is the diagonal of the kernel
    covariance.  For a fixed seed the pair sets are nested as n_pairs grows
    (pairs are drawn pair-by-pair from one stream), so the max error can
    only grow with more pairs.
    """
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (dims,))
    if np.any(sigma <= 0):
        raise ValueError("sigma entries must be positive")
    feature_counts = [int(D) for D in feature_counts]
    if not feature_counts or any(D < 1 for D in feature_counts):
        raise ValueError("feature_counts must be positive integers")
    if n_pairs < 1:
        raise ValueError("need n_pairs >= 1")
    children = np.random.SeedSequence(seed).generate_state(1 + len(feature_counts), dtype=np.uint64)
    pairs = np.random.default_rng(int(children[0])).uniform(-1.0, 1.0, size=(n_pairs, 2, dims))
    u = pairs[:, 0, :] - pairs[:, 1, :]
    scale = np.sqrt(sigma)  # kernel covariance is diag(scale**2)
    k_true = gaussian_kernel(u, scale)
    rows = []
    for j, D in enumerate(feature_counts):
        fm = build_feature_map(dims, D, int(children[1 + j]), np.log(scale))
        err = np.abs(_rff_kernel_on_displacements(fm, u) - k_true)
        rows.append(SweepRow(D, float(err.max()), float(err.mean())))
    return rows


def _rff_kernel_on_displacements(fm, u) -> np.ndarray:
    # phi(x) . phi(x') depends on the pair only through the phase difference,
    # and equals mean_i cos(e_i . (s * (x - x'))); evaluated in blocks so the
    # (pairs x D) phase matrix never gets large.
    out = np.empty(len(u))
    block = max(1, 4_000_000 // max(1, fm.num_features))
    s = fm.scale()
    for start in range(0, len(u), block):
        t = (u[start : start + block] * s) @ fm.directions.T
        out[start : start + block] = np.cos(t).mean(axis=1)
    return out
