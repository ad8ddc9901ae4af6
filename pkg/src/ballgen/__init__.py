"""Generative modeling by enclosing random Fourier features of data in a minimal ball.

Train in two phases: fit a minimal enclosing ball of the mapped training
data (learning the kernel scale along the way), then train an MLP generator
so its outputs map inside that ball while matching the data's feature mean.
"""

from .ball import Ball, ball_gradients, ball_objective, decision_value, fit_ball, hinge_violation
from .checkpoint import Checkpoint, checkpoint_bytes, load_checkpoint, save_checkpoint
from .config import TrainConfig, default_phase1_epochs
from .data import (
    Dataset,
    MixtureSpec,
    ScaleRecord,
    diameter_estimate,
    load_csv,
    load_mnist_idx,
    mixture_1d_benchmark,
    mixture_2d_benchmark,
    rescale_to_bijective,
    sample_mixture,
    sample_s_shape,
    save_csv,
    write_mnist_idx,
)
from .generator import Generator, NoiseSpec, backward, build_generator, forward, sample_noise
from .metrics import (
    Histogram,
    build_histogram,
    equal_width_edges,
    kernel_error_sweep,
    mode_coverage,
    symmetric_kl,
    wasserstein_1d,
)
from .optim import AdamState, DivergenceError, adam_step
from .rff import (
    FeatureMap,
    approx_kernel,
    build_feature_map,
    check_bijection_conditions,
    gaussian_kernel,
    map_gradient_wrt_log_scale,
    map_jacobian_wrt_input,
    map_point,
    map_points,
)
from .trainer import build_components, generate, generator_loss, train

__version__ = "0.1.0"
