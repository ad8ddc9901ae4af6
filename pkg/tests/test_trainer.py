import numpy as np
import pytest

from ballgen.ball import Ball
from ballgen.checkpoint import checkpoint_bytes
from ballgen.config import TrainConfig, default_phase1_epochs
from ballgen.data import Dataset, mixture_1d_benchmark, sample_mixture
from ballgen.generator import NoiseSpec, forward, sample_noise
from ballgen.rff import build_feature_map, map_points
from ballgen.trainer import build_components, generate, generator_loss, train
from oracles import central_difference, relative_error


def _tiny_dataset(n=200, seed=0):
    return sample_mixture(mixture_1d_benchmark(), n, np.random.default_rng(seed))


def _tiny_cfg(**kw):
    base = dict(
        total_epochs=6,
        phase1_epochs=3,
        batch_size=50,
        noise=NoiseSpec("uniform", 1),
        lam=0.5,
        num_features=20,
        lr_ball=1e-3,
        lr_gen=1e-3,
        seed=11,
        gen_hidden=(8, 8),
    )
    base.update(kw)
    return TrainConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        _tiny_cfg(phase1_epochs=6)  # must be < total
    with pytest.raises(ValueError):
        _tiny_cfg(phase1_epochs=0)
    with pytest.raises(ValueError):
        _tiny_cfg(batch_size=0)
    with pytest.raises(ValueError):
        _tiny_cfg(lam=-1.0)
    with pytest.raises(ValueError):
        _tiny_cfg(fm_weight=-0.1)
    assert default_phase1_epochs(7) == 4
    assert default_phase1_epochs(1) == 1


def test_generator_loss_zero_at_joint_minimum():
    # generated points used as the data batch: means match exactly, and a big
    # radius keeps every point inside, so the loss and all gradients vanish
    fm = build_feature_map(2, 6, seed=1)
    gen, rng = None, np.random.default_rng(2)
    from ballgen.generator import build_generator

    gen = build_generator(3, [(5, "softplus"), (2, "identity")], seed=3)
    z = rng.uniform(-1, 1, (6, 3))
    y, _ = forward(gen, z)
    ball = Ball(center=np.zeros(12), radius_sq=9.0, lam=1.0)
    out = generator_loss(fm, ball, gen, z, y, fm_weight=1.0)
    assert out.loss == pytest.approx(0.0, abs=1e-15)
    assert out.hinge_mean == 0.0
    assert out.feature_gap == pytest.approx(0.0, abs=1e-12)
    assert all(np.all(dw == 0.0) and np.all(db == 0.0) for dw, db in out.grads)


def test_generator_loss_zero_weight_is_pure_hinge():
    fm = build_feature_map(1, 5, seed=4)
    from ballgen.generator import build_generator

    gen = build_generator(2, [(4, "softplus"), (1, "identity")], seed=5)
    rng = np.random.default_rng(6)
    z = rng.uniform(-1, 1, (8, 2))
    x = rng.normal(size=(8, 1))
    ball = Ball(center=np.full(10, 0.4), radius_sq=0.01, lam=1.0)
    out = generator_loss(fm, ball, gen, z, x, fm_weight=0.0)
    assert out.loss == pytest.approx(out.hinge_mean)
    assert out.feature_gap > 0.0


def test_generator_loss_rejects_empty():
    fm = build_feature_map(1, 3, seed=7)
    from ballgen.generator import build_generator

    gen = build_generator(1, [(1, "identity")], seed=8)
    ball = Ball(center=np.zeros(6), radius_sq=1.0, lam=1.0)
    with pytest.raises(ValueError):
        generator_loss(fm, ball, gen, np.zeros((0, 1)), np.zeros((3, 1)))


@pytest.mark.parametrize("trial", range(6))
def test_generator_loss_gradient_matches_finite_differences(trial):
    rng = np.random.default_rng(400 + trial)
    from ballgen.generator import build_generator

    fm = build_feature_map(2, 6, seed=trial, initial_log_scale=rng.normal(size=2) * 0.3)
    gen = build_generator(2, [(5, "softplus"), (2, "identity")], seed=trial + 50)
    z = rng.uniform(-1, 1, (5, 2))
    x = rng.normal(size=(4, 2))
    # small radius with an offset center keeps every violation strictly active
    ball = Ball(center=rng.normal(size=12) * 0.1, radius_sq=0.01, lam=1.0)
    out = generator_loss(fm, ball, gen, z, x, fm_weight=1.3)
    y, _ = forward(gen, z)
    phi = map_points(fm, y)
    margins = np.abs(np.einsum("ij,ij->i", phi - ball.center, phi - ball.center) - ball.radius_sq)
    assert margins.min() > 1e-3  # finite differences stay on one side of the kink

    analytic = np.concatenate([np.concatenate([dw.ravel(), db.ravel()]) for dw, db in out.grads])
    flat0 = np.concatenate(
        [np.concatenate([l.weight.ravel(), l.bias.ravel()]) for l in gen.layers]
    )

    def scalar(flat):
        pos = 0
        for layer in gen.layers:
            n = layer.weight.size
            layer.weight[...] = flat[pos : pos + n].reshape(layer.weight.shape)
            pos += n
            layer.bias[...] = flat[pos : pos + layer.bias.size]
            pos += layer.bias.size
        try:
            return generator_loss(fm, ball, gen, z, x, fm_weight=1.3).loss
        finally:
            pos = 0
            for layer in gen.layers:
                n = layer.weight.size
                layer.weight[...] = flat0[pos : pos + n].reshape(layer.weight.shape)
                pos += n
                layer.bias[...] = flat0[pos : pos + layer.bias.size]
                pos += layer.bias.size

    fd = central_difference(scalar, flat0, 1e-5)
    assert relative_error(analytic, fd) < 1e-4


def test_train_epoch_accounting_and_phases():
    ds = _tiny_dataset()
    records = []
    cfg = _tiny_cfg(total_epochs=5, phase1_epochs=4)
    train(ds, cfg, log_fn=records.append)
    assert [r["epoch"] for r in records] == [1, 2, 3, 4, 5]
    phases = [r["phase"] for r in records]
    assert phases == [1, 1, 1, 1, 2]
    assert sum(1 for p in phases if p == 2) == cfg.total_epochs - cfg.phase1_epochs
    for r in records:
        assert np.isfinite(r["objective"])
        assert np.isfinite(r["hinge_mean"])
        assert r["wall_ms"] >= 0.0
        if r["phase"] == 2:
            assert np.isfinite(r["fm_gap"])
        else:
            assert r["fm_gap"] is None


def test_train_deterministic_checkpoints():
    ds = _tiny_dataset()
    cfg = _tiny_cfg()
    a = train(ds, cfg)
    b = train(ds, cfg)
    assert checkpoint_bytes(a) == checkpoint_bytes(b)


def test_train_ball_frozen_through_phase_two():
    ds = _tiny_dataset()
    snap = {}
    cfg = _tiny_cfg(total_epochs=8, phase1_epochs=2)

    def watch(record):
        if record["phase"] == 1:
            snap["epoch"] = record["epoch"]

    ckpt_mid = train(ds, _tiny_cfg(total_epochs=3, phase1_epochs=2))
    ckpt_end = train(ds, _tiny_cfg(total_epochs=8, phase1_epochs=2))
    # same seed and data: the ball and kernel scale never move after phase 1
    assert np.array_equal(ckpt_mid.ball.center, ckpt_end.ball.center)
    assert ckpt_mid.ball.radius_sq == ckpt_end.ball.radius_sq
    assert np.array_equal(ckpt_mid.feature_map.log_scale, ckpt_end.feature_map.log_scale)
    assert not all(
        np.array_equal(a.weight, b.weight)
        for a, b in zip(ckpt_mid.generator.layers, ckpt_end.generator.layers)
    )


def test_train_improves_heldout_hinge():
    # data away from the origin: a fresh generator lands outside the ball
    rng = np.random.default_rng(77)
    ds = Dataset(3.0 + 0.1 * rng.standard_normal((400, 1)), name="shifted")
    cfg = _tiny_cfg(total_epochs=40, phase1_epochs=10, num_features=50, lam=0.1)
    ckpt = train(ds, cfg)
    _, untrained = build_components(cfg, ds.dims)
    z = sample_noise(cfg.noise, 500, np.random.default_rng(123))
    before = generator_loss(ckpt.feature_map, ckpt.ball, untrained, z, ds.points[:400]).hinge_mean
    after = generator_loss(ckpt.feature_map, ckpt.ball, ckpt.generator, z, ds.points[:400]).hinge_mean
    assert before > 0.0
    assert after < before


def test_train_records_diameter_and_scale():
    ds = _tiny_dataset()
    ckpt = train(ds, _tiny_cfg())
    assert ckpt.data_diameter is not None and ckpt.data_diameter > 0
    assert ckpt.scale_applied is None


def test_generate_shapes_and_validation():
    ds = _tiny_dataset()
    ckpt = train(ds, _tiny_cfg())
    samples = generate(ckpt, 25, np.random.default_rng(0))
    assert samples.shape == (25, 1)
    with pytest.raises(ValueError):
        generate(ckpt, 0, np.random.default_rng(0))


def test_generate_applies_inverse_scaling():
    ds = _tiny_dataset()
    ckpt = train(ds, _tiny_cfg())
    from ballgen.data import ScaleRecord

    plain = generate(ckpt, 10, np.random.default_rng(1))
    ckpt.scale_applied = ScaleRecord(shift=np.array([1.0]), factor=np.array([2.0]))
    undone = generate(ckpt, 10, np.random.default_rng(1))
    assert np.allclose(undone, plain / 2.0 + 1.0)


def test_train_writes_epoch_boundary_checkpoints(tmp_path):
    ds = _tiny_dataset()
    path = tmp_path / "ckpt.json"
    ckpt = train(ds, _tiny_cfg(), checkpoint_path=path)
    assert path.exists()
    from ballgen.checkpoint import load_checkpoint

    on_disk = load_checkpoint(path)
    assert checkpoint_bytes(on_disk) == checkpoint_bytes(ckpt)
