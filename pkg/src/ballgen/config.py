"""Run configuration for the two-phase training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .generator import NoiseSpec


@dataclass
class TrainConfig:
    """Every knob of a training run; echoed verbatim into checkpoints.

    `phase1_epochs` is the number of leading epochs spent fitting the ball;
    the remaining `total_epochs - phase1_epochs` epochs train the generator
    with the ball and kernel scale frozen.
    """

    total_epochs: int
    phase1_epochs: int
    batch_size: int
    noise: NoiseSpec
    lam: float = 1.0
    num_features: int = 100
    lr_ball: float = 1e-3
    lr_gen: float = 1e-4
    fm_weight: float = 1.0
    seed: int = 0
    gen_hidden: tuple = (30, 30)
    gen_hidden_activation: str = "softplus"
    gen_output_activation: str = "identity"
    log_scale_init: float = 0.0

    def __post_init__(self):
        self.gen_hidden = tuple(int(w) for w in self.gen_hidden)
        if not 1 <= self.phase1_epochs < self.total_epochs:
            raise ValueError("need 1 <= phase1_epochs < total_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr_ball <= 0 or self.lr_gen <= 0:
            raise ValueError("learning rates must be positive")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.num_features < 1:
            raise ValueError("num_features must be >= 1")
        if self.fm_weight < 0:
            raise ValueError("fm_weight must be >= 0")

    def generator_specs(self, out_dim: int):
        """(width, activation) pairs for the generator on `out_dim` data."""
        specs = [(w, self.gen_hidden_activation) for w in self.gen_hidden]
        specs.append((int(out_dim), self.gen_output_activation))
        return specs


def default_phase1_epochs(total_epochs: int) -> int:
    """The ball phase gets the first ceil(T/2) epochs when not configured."""
    return max(1, math.ceil(total_epochs / 2))
