"""Two-phase training: fit the enclosing ball, then train the generator into it.

Epochs 1..phase1_epochs update (radius_sq, center, log_scale); the remaining
epochs freeze all three and update only the generator, whose loss is the
mean hinge violation of its mapped outputs plus a weighted squared gap
between the batch feature means of data and generated samples.  The gap
term stops the generator from parking all its mass in one small region of
the ball.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ball import Ball, fit_ball
from .checkpoint import Checkpoint, save_checkpoint
from .config import TrainConfig, default_phase1_epochs
from .data import Dataset, as_points, diameter_estimate
from .generator import Generator, NoiseSpec, backward, build_generator, forward, sample_noise
from .optim import AdamState, DivergenceError, adam_step
from .rff import FeatureMap, batch_features, batch_input_vjp, build_feature_map, map_points

__all__ = [
    "TrainConfig",
    "NoiseSpec",
    "AdamState",
    "adam_step",
    "GeneratorLossResult",
    "generator_loss",
    "build_components",
    "train",
    "generate",
    "default_phase1_epochs",
]


@dataclass
class GeneratorLossResult:
    loss: float
    hinge_mean: float
    feature_gap: float  # || mean phi(x) - mean phi(G(z)) ||
    grads: list         # one (d_weight, d_bias) pair per layer


def generator_loss(fm: FeatureMap, b: Ball, gen: Generator, z_batch, x_batch,
                   fm_weight: float = 1.0) -> GeneratorLossResult:
    """Hinge-into-the-ball loss plus fm_weight * squared feature-mean gap.

    Gradients flow only into the generator parameters; the feature map and
    ball are read-only here.
    """
    z = np.asarray(z_batch, dtype=float)
    x = np.asarray(x_batch, dtype=float)
    if z.ndim != 2 or x.ndim != 2 or len(z) == 0 or len(x) == 0:
        raise ValueError("z_batch and x_batch must be nonempty 2-D arrays")
    n = len(z)
    y, tape = forward(gen, z)
    bf = batch_features(fm, y)
    res = bf.phi - b.center
    viol = np.einsum("ij,ij->i", res, res) - b.radius_sq
    active = viol > 0.0
    hinge_mean = float(np.maximum(viol, 0.0).mean())
    gap_vec = map_points(fm, x).mean(axis=0) - bf.phi.mean(axis=0)
    gap = float(np.sqrt(gap_vec @ gap_vec))
    loss = hinge_mean + fm_weight * float(gap_vec @ gap_vec)
    d_phi = np.where(active[:, None], (2.0 / n) * res, 0.0)
    d_phi -= (2.0 * fm_weight / n) * gap_vec
    d_y = batch_input_vjp(fm, bf, d_phi)
    grads = backward(gen, tape, d_y)
    return GeneratorLossResult(loss, hinge_mean, gap, grads)


def _child_seeds(seed, n):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def build_components(cfg: TrainConfig, dims_in: int):
    """Deterministically build the feature map and untrained generator for a config."""
    fm_seed, gen_seed = _child_seeds(cfg.seed, 2)
    fm = build_feature_map(
        dims_in, cfg.num_features, fm_seed, np.full(dims_in, float(cfg.log_scale_init))
    )
    gen = build_generator(cfg.noise.dim, cfg.generator_specs(dims_in), gen_seed)
    return fm, gen


def train(data, cfg: TrainConfig, log_fn=None, checkpoint_path=None) -> Checkpoint:
    """Run the full two-phase loop and return the final state as a Checkpoint.

    Per-epoch records go to `log_fn`; when `checkpoint_path` is set the
    current state is also saved at every epoch boundary, so an interrupted
    run leaves the last completed epoch on disk.
    """
    ds = data if isinstance(data, Dataset) else Dataset(as_points(data), name="array")
    X = ds.points
    n, d = X.shape
    fm, gen = build_components(cfg, d)
    seeds = _child_seeds(cfg.seed, 4)
    rng_shuffle = np.random.default_rng(seeds[2])
    rng_noise = np.random.default_rng(seeds[3])
    diameter = diameter_estimate(ds).value

    def assemble(ball_now):
        return Checkpoint(
            config=cfg,
            feature_map=fm,
            ball=ball_now,
            generator=gen,
            rng_state=rng_noise.bit_generator.state,
            scale_applied=ds.scale_applied,
            data_diameter=diameter,
        )

    def emit(ball_now, record):
        if log_fn is not None:
            log_fn(record)
        if checkpoint_path is not None:
            save_checkpoint(assemble(ball_now), checkpoint_path)

    ball = fit_ball(fm, X, cfg, AdamState(), rng=rng_shuffle, epoch_callback=emit)

    gen_params = {}
    for i, layer in enumerate(gen.layers):
        gen_params[f"w{i}"] = layer.weight
        gen_params[f"b{i}"] = layer.bias
    gen_opt = AdamState()
    for epoch in range(cfg.phase1_epochs + 1, cfg.total_epochs + 1):
        tic = time.perf_counter()
        order = rng_shuffle.permutation(n)
        loss_sum = hinge_sum = gap_sum = 0.0
        batches = 0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            zb = sample_noise(cfg.noise, len(idx), rng_noise)
            result = generator_loss(fm, ball, gen, zb, X[idx], cfg.fm_weight)
            if not np.isfinite(result.loss):
                raise DivergenceError(
                    f"non-finite generator loss at epoch {epoch}, batch {bi}"
                )
            gdict = {}
            for i, (dw, db) in enumerate(result.grads):
                gdict[f"w{i}"] = dw
                gdict[f"b{i}"] = db
            try:
                adam_step(gen_opt, gen_params, gdict, cfg.lr_gen)
            except DivergenceError as exc:
                raise DivergenceError(f"{exc} (epoch {epoch}, batch {bi})") from exc
            loss_sum += result.loss
            hinge_sum += result.hinge_mean
            gap_sum += result.feature_gap
            batches += 1
        emit(
            ball,
            {
                "epoch": epoch,
                "phase": 2,
                "objective": loss_sum / batches,
                "hinge_mean": hinge_sum / batches,
                "fm_gap": gap_sum / batches,
                "wall_ms": (time.perf_counter() - tic) * 1000.0,
            },
        )

    ckpt = assemble(ball)
    if checkpoint_path is not None:
        save_checkpoint(ckpt, checkpoint_path)
    return ckpt


def generate(ckpt: Checkpoint, n: int, rng) -> np.ndarray:
    """Draw n samples from the checkpointed generator, in original data units."""
    if n < 1:
        raise ValueError("need n >= 1")
    z = sample_noise(ckpt.config.noise, n, rng)
    y, _ = forward(ckpt.generator, z)
    if ckpt.scale_applied is not None:
        y = ckpt.scale_applied.invert(y)
    return y
