"""Command-line surface: train, generate, eval, contour, check.

Exit codes: 0 success, 2 config/usage error, 3 data error, 4 numerical
abort, 5 checkpoint error.  The GEN_OUT_DIR environment variable overrides
the configured output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .ball import Ball
from .checkpoint import (
    Checkpoint,
    CheckpointError,
    load_checkpoint,
)
from .config import TrainConfig, default_phase1_epochs
from .data import (
    DataError,
    Dataset,
    MixtureSpec,
    diameter_estimate,
    load_csv,
    load_mnist_idx,
    rescale_to_bijective,
    sample_mixture,
    sample_s_shape,
    save_csv,
)
from .generator import NoiseSpec
from .metrics import build_histogram, equal_width_edges, mode_coverage, symmetric_kl, wasserstein_1d
from .optim import DivergenceError
from .rff import batch_features, check_bijection_conditions, map_points
from .trainer import _child_seeds, build_components, generate, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_CHECKPOINT = 5


class ConfigError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _mixture_from_components(components) -> MixtureSpec:
    weights, means, variances = [], [], []
    for comp in components:
        weights.append(comp["weight"])
        means.append(comp["mean"])
        if "var" in comp:
            variances.append(comp["var"])
        elif "std" in comp:
            variances.append([s * s for s in np.atleast_1d(comp["std"])])
        else:
            raise ConfigError("mixture component needs a 'var' or 'std' entry")
    return MixtureSpec(weights=weights, means=means, variances=variances)


def build_dataset(spec: dict, fallback_seed: int) -> Dataset:
    """Construct the training dataset described by a config's dataset block."""
    kind = spec.get("kind")
    seed = spec.get("seed", fallback_seed)
    if kind == "mixture":
        mix = _mixture_from_components(spec["components"])
        return sample_mixture(mix, int(spec["n"]), np.random.default_rng(seed))
    if kind == "s_shape":
        return sample_s_shape(
            int(spec["n"]), float(spec.get("noise_std", 0.05)), np.random.default_rng(seed)
        )
    if kind == "mnist":
        return load_mnist_idx(spec["images"], spec["labels"], int(spec["subset"]))
    if kind == "csv":
        return load_csv(spec["path"])
    raise ConfigError(f"unknown dataset kind {kind!r}")


def parse_train_config(doc: dict) -> TrainConfig:
    try:
        total = int(doc["total_epochs"])
        noise = doc["noise"]
        gen = doc.get("generator", {})
        return TrainConfig(
            total_epochs=total,
            phase1_epochs=int(doc.get("phase1_epochs", default_phase1_epochs(total))),
            batch_size=int(doc["batch_size"]),
            noise=NoiseSpec(kind=noise["kind"], dim=int(noise["dim"])),
            lam=float(doc.get("lambda", 1.0)),
            num_features=int(doc.get("num_features", 100)),
            lr_ball=float(doc.get("lr_ball", 1e-3)),
            lr_gen=float(doc.get("lr_gen", 1e-4)),
            fm_weight=float(doc.get("fm_weight", 1.0)),
            seed=int(doc.get("seed", 0)),
            gen_hidden=tuple(gen.get("hidden", [30, 30])),
            gen_hidden_activation=gen.get("hidden_activation", "softplus"),
            gen_output_activation=gen.get("output_activation", "identity"),
            log_scale_init=float(doc.get("log_scale_init", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid training config: {exc}") from exc


def _out_dir(doc: dict) -> str:
    out = os.environ.get("GEN_OUT_DIR") or doc.get("out_dir") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_histogram_csv(path, ds: Dataset, samples, dataset_spec):
    if dataset_spec.get("kind") == "mixture":
        mix = _mixture_from_components(dataset_spec["components"])
        lo, hi = mix.envelope()
        edges = equal_width_edges(float(lo[0]), float(hi[0]), 100)
    else:
        lo, hi = float(ds.points.min()), float(ds.points.max())
        pad = 0.05 * max(hi - lo, 1e-6)
        edges = equal_width_edges(lo - pad, hi + pad, 100)
    data_hist = build_histogram(ds.points[:, 0], edges, 1e-3)
    gen_hist = build_histogram(np.asarray(samples)[:, 0], edges, 1e-3)
    with open(path, "w") as f:
        f.write("bin_left,bin_right,data_mass,generated_mass\n")
        for i in range(len(edges) - 1):
            f.write(
                f"{edges[i]:.17g},{edges[i + 1]:.17g},"
                f"{data_hist.mass[i]:.17g},{gen_hist.mass[i]:.17g}\n"
            )


def cmd_train(args) -> int:
    doc = _load_json(args.config)
    cfg = parse_train_config(doc)
    if "dataset" not in doc:
        raise ConfigError("config is missing the 'dataset' block")
    ds = build_dataset(doc["dataset"], cfg.seed)
    if doc.get("rescale_to_bijective", False):
        fm, _ = build_components(cfg, ds.dims)
        ds = rescale_to_bijective(ds, fm)
    out = _out_dir(doc)
    ckpt_path = os.path.join(out, "checkpoint.json")
    log_path = os.path.join(out, "train_log.jsonl")
    with open(log_path, "w") as log_file:

        def log_fn(record):
            log_file.write(json.dumps(record, sort_keys=True) + "\n")
            log_file.flush()

        ckpt = train(ds, cfg, log_fn=log_fn, checkpoint_path=ckpt_path)
    if ds.dims == 1:
        hist_rng = np.random.default_rng(_child_seeds(cfg.seed, 5)[4])
        samples = generate(ckpt, 10_000, hist_rng)
        _write_histogram_csv(os.path.join(out, "histogram.csv"), ds, samples, doc["dataset"])
    print(f"trained {cfg.total_epochs} epochs on {ds.name}; checkpoint at {ckpt_path}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.n < 1:
        print("error: --n must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    ckpt = load_checkpoint(args.checkpoint)
    samples = generate(ckpt, args.n, np.random.default_rng(args.seed))
    save_csv(samples, args.out)
    print(f"wrote {args.n} samples of dimension {samples.shape[1]} to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    truth_doc = _load_json(args.truth)
    if "components" not in truth_doc:
        raise ConfigError(f"{args.truth}: truth spec needs a 'components' list")
    mix = _mixture_from_components(truth_doc["components"])
    radius = float(truth_doc.get("mode_radius", 0.15))
    seeds = _child_seeds(args.seed, 2)
    samples = generate(ckpt, args.n, np.random.default_rng(seeds[0]))
    truth = sample_mixture(mix, args.n, np.random.default_rng(seeds[1]))
    if samples.shape[1] != mix.dims:
        raise ConfigError(
            f"checkpoint generates dimension {samples.shape[1]} but truth spec has {mix.dims}"
        )
    if mix.dims == 1:
        lo, hi = mix.envelope()
        edges = equal_width_edges(float(lo[0]), float(hi[0]), 100)
        kl = symmetric_kl(
            build_histogram(samples[:, 0], edges, 1e-3),
            build_histogram(truth.points[:, 0], edges, 1e-3),
        )
        w1 = wasserstein_1d(samples[:, 0], truth.points[:, 0])
    else:
        kl = w1 = float("nan")
    modes = [(mix.means[i], radius, mix.weights[i]) for i in range(mix.num_components)]
    coverage = mode_coverage(samples, modes)
    header = ["n", "symmetric_kl", "wasserstein"] + [
        f"coverage_{i}" for i in range(len(coverage))
    ]
    values = [str(args.n), f"{kl:.17g}", f"{w1:.17g}"] + [f"{c:.17g}" for c in coverage]
    with open(args.out, "w") as f:
        f.write(",".join(header) + "\n")
        f.write(",".join(values) + "\n")
    print(f"eval written to {args.out}")
    return EXIT_OK


def cmd_contour(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    try:
        parts = args.grid.split(",")
        x0, x1, y0, y1 = (float(v) for v in parts[:4])
        res = int(parts[4])
        if len(parts) != 5 or res < 2 or not (x1 > x0 and y1 > y0):
            raise ValueError("bad grid ranges")
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"invalid --grid (expected x0,x1,y0,y1,res): {exc}") from exc
    if ckpt.generator.out_dim != 2:
        raise ConfigError(
            f"contour needs a 2-D checkpoint, this one has dimension {ckpt.generator.out_dim}"
        )
    xs = np.linspace(x0, x1, res)
    ys = np.linspace(y0, y1, res)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    phi = map_points(ckpt.feature_map, grid)
    res_vec = phi - ckpt.ball.center
    values = ckpt.ball.radius_sq - np.einsum("ij,ij->i", res_vec, res_vec)
    with open(args.out, "w") as f:
        f.write("x,y,value\n")
        for (px, py), v in zip(grid, values):
            f.write(f"{px:.17g},{py:.17g},{v:.17g}\n")
    print(f"wrote {len(values)} grid values to {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    doc = _load_json(args.path)
    if isinstance(doc, dict) and "format_version" in doc:
        ckpt = load_checkpoint(args.path)
        fm = ckpt.feature_map
        diameter = 0.0 if ckpt.data_diameter is None else float(ckpt.data_diameter)
        method = "checkpoint"
        probe = np.random.default_rng(0).standard_normal((100, fm.dims_in))
    else:
        cfg = parse_train_config(doc)
        if "dataset" not in doc:
            raise ConfigError("config is missing the 'dataset' block")
        ds = build_dataset(doc["dataset"], cfg.seed)
        fm, _ = build_components(cfg, ds.dims)
        if doc.get("rescale_to_bijective", False):
            ds = rescale_to_bijective(ds, fm)
        est = diameter_estimate(ds)
        diameter, method = est.value, est.method
        probe = ds.points[:100]
    report = check_bijection_conditions(fm, diameter)
    phi = batch_features(fm, probe).phi
    norms_sq = np.einsum("ij,ij->i", phi, phi)
    out = {
        "rank_ok": report.rank_ok,
        "contraction_ok": report.contraction_ok,
        "product_value": report.product_value,
        "rank": report.rank,
        "diameter": diameter,
        "diameter_method": method,
        "unit_norm_max_abs_dev": float(np.max(np.abs(norms_sq - 1.0))),
    }
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the two-phase training loop from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample from a trained checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="distance metrics and mode coverage against a truth spec")
    p.add_argument("checkpoint")
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("contour", help="decision values over a rectangular grid")
    p.add_argument("checkpoint")
    p.add_argument("--grid", required=True, help="x0,x1,y0,y1,res")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_contour)

    p = sub.add_parser("check", help="bijectivity report for a checkpoint or config")
    p.add_argument("path")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT


if __name__ == "__main__":
    sys.exit(main())
