"""Datasets: synthetic samplers, IDX image ingestion, scaling, CSV persistence."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rff import check_bijection_conditions


class DataError(Exception):
    """Problem with dataset contents or files."""


class IdxError(DataError):
    pass


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxShapeError(IdxError):
    pass


@dataclass
class ScaleRecord:
    """Per-dimension affine transform applied to a dataset: (x - shift) * factor."""

    shift: np.ndarray
    factor: np.ndarray

    def apply(self, points):
        return (np.asarray(points, dtype=float) - self.shift) * self.factor

    def invert(self, points):
        return np.asarray(points, dtype=float) / self.factor + self.shift


@dataclass
class Dataset:
    points: np.ndarray  # (n, d)
    name: str
    scale_applied: ScaleRecord | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise DataError("points must be a nonempty (n, d) array")
        if not np.all(np.isfinite(self.points)):
            raise DataError("points contain non-finite entries")

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]


def as_points(data) -> np.ndarray:
    """Normalize a Dataset, array, or list of vectors to an (n, d) float array."""
    if isinstance(data, Dataset):
        return data.points
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array of points (one row per point)")
    return X


@dataclass
class MixtureSpec:
    """Gaussian mixture with diagonal covariances, stored as variances.

    Means like N(-0.6, 0.03) are read with 0.03 as the *variance*; pass
    standard deviations squared if the source quotes them the other way.
    """

    weights: np.ndarray   # (k,)
    means: np.ndarray     # (k, d)
    variances: np.ndarray  # (k, d)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.variances = np.atleast_2d(np.asarray(self.variances, dtype=float))
        if self.weights.ndim != 1 or self.weights.size < 1:
            raise DataError("weights must be a nonempty vector")
        if np.any(self.weights <= 0):
            raise DataError("weights must be positive")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise DataError("weights must sum to 1")
        k = self.weights.size
        if self.means.shape[0] != k or self.variances.shape != self.means.shape:
            raise DataError("means/variances shapes do not match weights")
        if np.any(self.variances <= 0):
            raise DataError("variances must be positive")

    @property
    def num_components(self) -> int:
        return self.weights.size

    @property
    def dims(self) -> int:
        return self.means.shape[1]

    def envelope(self, n_sigmas: float = 4.0):
        """Per-dimension (lo, hi) covering every component mean +/- n_sigmas."""
        std = np.sqrt(self.variances)
        lo = (self.means - n_sigmas * std).min(axis=0)
        hi = (self.means + n_sigmas * std).max(axis=0)
        return lo, hi


def mixture_1d_benchmark() -> MixtureSpec:
    """Three-component univariate benchmark: 0.45 N(-0.6, .03) + 0.25 N(0.7, .02) + 0.3 N(0, .01)."""
    return MixtureSpec(
        weights=[0.45, 0.25, 0.30],
        means=[[-0.6], [0.7], [0.0]],
        variances=[[0.03], [0.02], [0.01]],
    )


def mixture_2d_benchmark(variance: float = 0.01) -> MixtureSpec:
    """Equal-weight 2-D mixture with means (-0.8, 0.2), (0.8, 0.0), (0.0, -0.5)."""
    return MixtureSpec(
        weights=[1.0 / 3.0] * 3,
        means=[[-0.8, 0.2], [0.8, 0.0], [0.0, -0.5]],
        variances=[[variance, variance]] * 3,
    )


def sample_mixture(spec: MixtureSpec, n: int, rng) -> Dataset:
    """Draw n points: pick a component by weight, then a diagonal Gaussian draw."""
    if n < 1:
        raise ValueError("need n >= 1")
    comp = rng.choice(spec.num_components, size=n, p=spec.weights / spec.weights.sum())
    eps = rng.standard_normal((n, spec.dims))
    pts = spec.means[comp] + eps * np.sqrt(spec.variances[comp])
    return Dataset(pts, name=f"mixture(k={spec.num_components},d={spec.dims},n={n})")


_S_SCALE = 0.75  # shrinks the raw [-1,1] x [-2,2] curve box into [-1.5,1.5]^2
_S_SPAN = 1.5 * np.pi


def s_curve_points(t, upper) -> np.ndarray:
    """Noise-free S curve: two 3*pi/2 arcs of unit circles centered (0, +/-1).

    The upper arm starts at the origin and sweeps counter-clockwise around
    (0, 1); the lower arm is its point reflection.  Output is scaled by 0.75
    so the curve's bounding box is [-0.75, 0.75] x [-1.5, 1.5].
    """
    t = np.asarray(t, dtype=float)
    theta = t - np.pi / 2
    pts = np.stack([np.cos(theta), 1.0 + np.sin(theta)], axis=-1)
    sign = np.where(np.asarray(upper).astype(bool), 1.0, -1.0)
    return pts * sign[..., None] * _S_SCALE


def sample_s_shape(n: int, noise_std: float, rng) -> Dataset:
    """Uniform draws along the two-arc S curve plus isotropic Gaussian noise."""
    if n < 1:
        raise ValueError("need n >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    upper = rng.integers(0, 2, size=n)
    t = rng.uniform(0.0, _S_SPAN, size=n)
    pts = s_curve_points(t, upper)
    pts = pts + noise_std * rng.standard_normal((n, 2))
    name = (
        f"s_shape(n={n},arcs=unit_circles@(0,+/-1),span=1.5pi,"
        f"scale={_S_SCALE},noise_std={noise_std})"
    )
    return Dataset(pts, name=name)


_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801


def _read_exact(f, count, what, path):
    data = f.read(count)
    if len(data) != count:
        raise IdxTruncatedError(f"{path}: truncated while reading {what}")
    return data


def _read_u32(f, what, path):
    return int.from_bytes(_read_exact(f, 4, what, path), "big")


def load_mnist_idx(images_path, labels_path, subset: int) -> Dataset:
    """Load the first `subset` images as rows of [0, 1]-scaled pixel vectors.

    Both files use the big-endian IDX layout: magic, counts/dims, then raw
    unsigned bytes.  Image and label counts must agree.
    """
    with open(images_path, "rb") as f:
        magic = _read_u32(f, "image magic", images_path)
        if magic != _IDX_IMAGE_MAGIC:
            raise IdxMagicError(f"{images_path}: bad image magic 0x{magic:08x}")
        count = _read_u32(f, "image count", images_path)
        rows = _read_u32(f, "row count", images_path)
        cols = _read_u32(f, "column count", images_path)
        raw = _read_exact(f, count * rows * cols, "pixels", images_path)
    with open(labels_path, "rb") as f:
        magic = _read_u32(f, "label magic", labels_path)
        if magic != _IDX_LABEL_MAGIC:
            raise IdxMagicError(f"{labels_path}: bad label magic 0x{magic:08x}")
        label_count = _read_u32(f, "label count", labels_path)
        _read_exact(f, label_count, "labels", labels_path)
    if label_count != count:
        raise IdxShapeError(f"label count {label_count} != image count {count}")
    if not 1 <= subset <= count:
        raise IdxShapeError(f"subset {subset} outside 1..{count}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
    pts = pixels[:subset].astype(float) / 255.0
    return Dataset(pts, name=f"mnist_idx(subset={subset},of={count},{rows}x{cols})")


def write_mnist_idx(images_path, labels_path, images, labels):
    """Write (n, rows, cols) uint8 images and (n,) uint8 labels in IDX layout."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("images must be (n, rows, cols)")
    n, rows, cols = images.shape
    if labels.shape != (n,):
        raise ValueError("labels must be (n,)")
    with open(images_path, "wb") as f:
        for value in (_IDX_IMAGE_MAGIC, n, rows, cols):
            f.write(value.to_bytes(4, "big"))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        for value in (_IDX_LABEL_MAGIC, n):
            f.write(value.to_bytes(4, "big"))
        f.write(labels.tobytes())


class DiameterEstimate(NamedTuple):
    value: float
    method: str  # "exact" below the pair-scan limit, else "range_bound"


_EXACT_DIAMETER_LIMIT = 5000


def diameter_estimate(ds) -> DiameterEstimate:
    """Max pairwise distance, exact for small sets, else a safe upper bound.

    The bound is the norm of the per-dimension ranges, which can only
    overestimate, keeping downstream contraction checks conservative.
    """
    X = as_points(ds)
    n = X.shape[0]
    if n == 1:
        return DiameterEstimate(0.0, "exact")
    if n <= _EXACT_DIAMETER_LIMIT:
        sq = np.einsum("ij,ij->i", X, X)
        best = 0.0
        block = max(1, 2 ** 22 // n)
        for start in range(0, n, block):
            stop = min(n, start + block)
            d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (X[start:stop] @ X.T)
            best = max(best, float(d2.max()))
        return DiameterEstimate(float(np.sqrt(max(best, 0.0))), "exact")
    ranges = X.max(axis=0) - X.min(axis=0)
    return DiameterEstimate(float(np.sqrt(np.sum(ranges ** 2))), "range_bound")


def rescale_to_bijective(ds: Dataset, fm) -> Dataset:
    """Shrink the data uniformly until the invertibility product sits at 95% of 2*pi.

    Returns the dataset unchanged when the contraction condition already
    holds; otherwise records the applied factor so generated samples can be
    mapped back to original units.
    """
    diam = diameter_estimate(ds).value
    report = check_bijection_conditions(fm, diam)
    if report.contraction_ok:
        return ds
    s = 0.95 * (2.0 * np.pi) / report.product_value
    if ds.scale_applied is not None:
        record = ScaleRecord(ds.scale_applied.shift.copy(), ds.scale_applied.factor * s)
    else:
        record = ScaleRecord(np.zeros(ds.dims), np.full(ds.dims, s))
    return Dataset(ds.points * s, name=ds.name + f"|scale({s:.6g})", scale_applied=record)


def save_csv(data, path):
    """Write points as CSV with an x0..x{d-1} header and 17-significant-digit floats."""
    X = as_points(data)
    header = ",".join(f"x{j}" for j in range(X.shape[1]))
    with open(path, "w") as f:
        np.savetxt(f, X, fmt="%.17g", delimiter=",", header=header, comments="")


def load_csv(path) -> Dataset:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Dataset(arr, name=os.path.basename(str(path)))
