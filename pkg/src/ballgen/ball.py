"""Minimal enclosing ball of mapped points: hinge objective, subgradients, fit loop.

The ball is parameterized by its center in feature space and the *squared*
radius, optimized directly with a projection back to [0, inf) after every
step; this avoids both a chain-rule factor and an explicit nonnegativity
constraint on the radius.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import as_points
from .optim import AdamState, DivergenceError, adam_step
from .rff import FeatureMap, batch_features, batch_log_scale_vjp, map_point


@dataclass
class Ball:
    center: np.ndarray  # (2D,)
    radius_sq: float
    lam: float          # weight of the radius term in the objective

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.center.ndim != 1:
            raise ValueError("center must be a vector")
        if self.radius_sq < 0:
            raise ValueError("radius_sq must be >= 0")
        if self.lam <= 0:
            raise ValueError("lam must be positive")


@dataclass
class BallGradients:
    d_radius_sq: float
    d_center: np.ndarray
    d_log_scale: np.ndarray


def hinge_violation(b: Ball, phi) -> float:
    """max(0, ||phi - center||^2 - radius_sq) for one feature vector."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != b.center.shape:
        raise ValueError(f"expected feature vector of shape {b.center.shape}, got {phi.shape}")
    diff = phi - b.center
    return float(max(0.0, diff @ diff - b.radius_sq))


def _batch_terms(b: Ball, fm: FeatureMap, X):
    bf = batch_features(fm, X)
    res = bf.phi - b.center
    viol = np.einsum("ij,ij->i", res, res) - b.radius_sq
    return bf, res, viol


def ball_objective(b: Ball, fm: FeatureMap, batch) -> float:
    """lam * radius_sq + mean hinge violation over the mapped batch."""
    X = as_points(batch)
    if X.shape[0] < 1:
        raise ValueError("empty batch")
    _, _, viol = _batch_terms(b, fm, X)
    return float(b.lam * b.radius_sq + np.mean(np.maximum(viol, 0.0)))


def _objective_and_gradients(b: Ball, fm: FeatureMap, X):
    n = X.shape[0]
    bf, res, viol = _batch_terms(b, fm, X)
    hinge = np.maximum(viol, 0.0)
    objective = float(b.lam * b.radius_sq + hinge.mean())
    active = viol > 0.0  # violation exactly 0 contributes the 0 subgradient
    num_active = int(np.count_nonzero(active))
    d_radius_sq = b.lam - num_active / n
    d_phi = np.where(active[:, None], (2.0 / n) * res, 0.0)
    d_center = -d_phi.sum(axis=0)
    d_log_scale = batch_log_scale_vjp(fm, X, bf, d_phi)
    return objective, BallGradients(float(d_radius_sq), d_center, d_log_scale)


def ball_gradients(b: Ball, fm: FeatureMap, batch) -> BallGradients:
    """Subgradient of ball_objective in (radius_sq, center, log_scale)."""
    X = as_points(batch)
    if X.shape[0] < 1:
        raise ValueError("empty batch")
    return _objective_and_gradients(b, fm, X)[1]


def decision_value(b: Ball, fm: FeatureMap, x) -> float:
    """radius_sq - ||phi(x) - center||^2: positive inside the learned contour."""
    diff = map_point(fm, x) - b.center
    return float(b.radius_sq - diff @ diff)


def fit_ball(fm: FeatureMap, data, cfg, opt: AdamState, rng=None, epoch_callback=None) -> Ball:
    """First training phase: minibatch Adam on (radius_sq, center, log_scale).

    The center starts at the feature mean of the first minibatch and the
    squared radius at that batch's 90th percentile of squared distances, so
    optimization begins near feasibility.  The callback, when given, runs at
    each epoch end with (ball, record) where the record carries the
    full-data objective.
    """
    X = as_points(data)
    n = X.shape[0]
    if n < 1:
        raise ValueError("empty dataset")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    order = rng.permutation(n)
    first = X[order[: min(cfg.batch_size, n)]]
    bf = batch_features(fm, first)
    center = bf.phi.mean(axis=0)
    d2 = np.einsum("ij,ij->i", bf.phi - center, bf.phi - center)
    radius_sq = np.asarray(max(float(np.percentile(d2, 90.0)), 0.0))
    ball = Ball(center=center, radius_sq=float(radius_sq), lam=cfg.lam)
    # center and log_scale alias the live arrays, so Adam updates them in place
    params = {"radius_sq": radius_sq, "center": ball.center, "log_scale": fm.log_scale}

    for epoch in range(1, cfg.phase1_epochs + 1):
        tic = time.perf_counter()
        if epoch > 1:
            order = rng.permutation(n)
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            batch = X[order[start : start + cfg.batch_size]]
            objective, grads = _objective_and_gradients(ball, fm, batch)
            if not np.isfinite(objective):
                raise DivergenceError(
                    f"non-finite ball objective at epoch {epoch}, batch {bi}"
                )
            try:
                adam_step(
                    opt,
                    params,
                    {
                        "radius_sq": grads.d_radius_sq,
                        "center": grads.d_center,
                        "log_scale": grads.d_log_scale,
                    },
                    cfg.lr_ball,
                )
            except DivergenceError as exc:
                raise DivergenceError(f"{exc} (epoch {epoch}, batch {bi})") from exc
            if radius_sq < 0.0:
                radius_sq[...] = 0.0
            ball.radius_sq = float(radius_sq)
        if epoch_callback is not None:
            full = ball_objective(ball, fm, X)
            record = {
                "epoch": epoch,
                "phase": 1,
                "objective": full,
                "hinge_mean": full - ball.lam * ball.radius_sq,
                "fm_gap": None,
                "wall_ms": (time.perf_counter() - tic) * 1000.0,
            }
            epoch_callback(ball, record)
    return ball
