"""Checkpoint persistence: one JSON document with base64-packed float64 arrays.

Serialization is canonical (sorted keys, fixed separators, little-endian
payloads), so saving the same state twice produces byte-identical files and
a load/save round trip reproduces the original bytes exactly.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass

import numpy as np

from .ball import Ball
from .config import TrainConfig
from .data import ScaleRecord
from .generator import Generator, Layer, NoiseSpec
from .rff import FeatureMap

FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Unreadable or structurally invalid checkpoint."""


class CheckpointVersionError(CheckpointError):
    pass


@dataclass
class Checkpoint:
    config: TrainConfig
    feature_map: FeatureMap
    ball: Ball
    generator: Generator
    rng_state: dict
    scale_applied: ScaleRecord | None = None
    data_diameter: float | None = None
    format_version: int = FORMAT_VERSION


def _encode_array(a) -> dict:
    a = np.ascontiguousarray(np.asarray(a, dtype=float), dtype="<f8")
    return {
        "shape": list(a.shape),
        "dtype": "<f8",
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def _decode_array(obj) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    arr = np.frombuffer(raw, dtype=obj["dtype"]).reshape(obj["shape"])
    return arr.astype(float, copy=True)


def _config_doc(cfg: TrainConfig) -> dict:
    return {
        "total_epochs": int(cfg.total_epochs),
        "phase1_epochs": int(cfg.phase1_epochs),
        "batch_size": int(cfg.batch_size),
        "noise": {"kind": str(cfg.noise.kind), "dim": int(cfg.noise.dim)},
        "lambda": float(cfg.lam),
        "num_features": int(cfg.num_features),
        "lr_ball": float(cfg.lr_ball),
        "lr_gen": float(cfg.lr_gen),
        "fm_weight": float(cfg.fm_weight),
        "seed": int(cfg.seed),
        "gen_hidden": [int(w) for w in cfg.gen_hidden],
        "gen_hidden_activation": str(cfg.gen_hidden_activation),
        "gen_output_activation": str(cfg.gen_output_activation),
        "log_scale_init": float(cfg.log_scale_init),
    }


def _config_from_doc(doc: dict) -> TrainConfig:
    return TrainConfig(
        total_epochs=int(doc["total_epochs"]),
        phase1_epochs=int(doc["phase1_epochs"]),
        batch_size=int(doc["batch_size"]),
        noise=NoiseSpec(kind=doc["noise"]["kind"], dim=int(doc["noise"]["dim"])),
        lam=float(doc["lambda"]),
        num_features=int(doc["num_features"]),
        lr_ball=float(doc["lr_ball"]),
        lr_gen=float(doc["lr_gen"]),
        fm_weight=float(doc["fm_weight"]),
        seed=int(doc["seed"]),
        gen_hidden=tuple(int(w) for w in doc["gen_hidden"]),
        gen_hidden_activation=doc["gen_hidden_activation"],
        gen_output_activation=doc["gen_output_activation"],
        log_scale_init=float(doc["log_scale_init"]),
    )


def to_document(ckpt: Checkpoint) -> dict:
    fm = ckpt.feature_map
    scale = None
    if ckpt.scale_applied is not None:
        scale = {
            "shift": _encode_array(ckpt.scale_applied.shift),
            "factor": _encode_array(ckpt.scale_applied.factor),
        }
    return {
        "format_version": int(ckpt.format_version),
        "config": _config_doc(ckpt.config),
        "feature_map": {
            "dims_in": int(fm.dims_in),
            "num_features": int(fm.num_features),
            "seed": int(fm.seed),
            "directions": _encode_array(fm.directions),
            "log_scale": _encode_array(fm.log_scale),
        },
        "ball": {
            "center": _encode_array(ckpt.ball.center),
            "radius_sq": float(ckpt.ball.radius_sq),
            "lambda": float(ckpt.ball.lam),
        },
        "generator": {
            "noise_dim": int(ckpt.generator.noise_dim),
            "layers": [
                {
                    "activation": layer.activation,
                    "weight": _encode_array(layer.weight),
                    "bias": _encode_array(layer.bias),
                }
                for layer in ckpt.generator.layers
            ],
        },
        "rng_state": ckpt.rng_state,
        "scale_applied": scale,
        "data_diameter": None if ckpt.data_diameter is None else float(ckpt.data_diameter),
    }


def from_document(doc: dict) -> Checkpoint:
    fm_doc = doc["feature_map"]
    feature_map = FeatureMap(
        dims_in=int(fm_doc["dims_in"]),
        num_features=int(fm_doc["num_features"]),
        directions=_decode_array(fm_doc["directions"]),
        log_scale=_decode_array(fm_doc["log_scale"]),
        seed=int(fm_doc["seed"]),
    )
    ball_doc = doc["ball"]
    ball = Ball(
        center=_decode_array(ball_doc["center"]),
        radius_sq=float(ball_doc["radius_sq"]),
        lam=float(ball_doc["lambda"]),
    )
    gen_doc = doc["generator"]
    layers = [
        Layer(
            weight=_decode_array(layer["weight"]),
            bias=_decode_array(layer["bias"]),
            activation=layer["activation"],
        )
        for layer in gen_doc["layers"]
    ]
    scale = None
    if doc.get("scale_applied") is not None:
        scale = ScaleRecord(
            shift=_decode_array(doc["scale_applied"]["shift"]),
            factor=_decode_array(doc["scale_applied"]["factor"]),
        )
    diameter = doc.get("data_diameter")
    return Checkpoint(
        config=_config_from_doc(doc["config"]),
        feature_map=feature_map,
        ball=ball,
        generator=Generator(layers, int(gen_doc["noise_dim"])),
        rng_state=doc["rng_state"],
        scale_applied=scale,
        data_diameter=None if diameter is None else float(diameter),
        format_version=int(doc["format_version"]),
    )


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    return json.dumps(to_document(ckpt), sort_keys=True, separators=(",", ":")).encode("ascii")


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Atomic write so interrupted runs never leave a half-written file."""
    path = str(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(checkpoint_bytes(ckpt))
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CheckpointVersionError(f"{path}: not a checkpoint document")
    if doc["format_version"] != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format_version {doc['format_version']} unsupported (expected {FORMAT_VERSION})"
        )
    try:
        return from_document(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
