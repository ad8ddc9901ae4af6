import numpy as np
import pytest

from ballgen.data import mixture_1d_benchmark, sample_mixture
from ballgen.metrics import (
    Histogram,
    build_histogram,
    equal_width_edges,
    kernel_error_sweep,
    mode_coverage,
    symmetric_kl,
    wasserstein_1d,
)
from oracles import mixture_window_mass


def test_histogram_single_sample_two_bins():
    h = build_histogram([0.2], [0.0, 0.5, 1.0])
    assert np.array_equal(h.mass, [1.0, 0.0])
    h = build_histogram([0.7], [0.0, 0.5, 1.0])
    assert np.array_equal(h.mass, [0.0, 1.0])


def test_histogram_left_inclusive_and_clamping():
    edges = [0.0, 1.0, 2.0]
    h = build_histogram([0.0, 1.0, 2.0, -5.0, 7.0], edges)
    # 0.0 -> bin 0; 1.0 -> bin 1 (left-inclusive); 2.0 and 7.0 clamp right; -5.0 clamps left
    assert np.allclose(h.mass, [2 / 5, 3 / 5])


def test_histogram_uniform_masses():
    rng = np.random.default_rng(0)
    h = build_histogram(rng.uniform(0, 1, 1_000_000), equal_width_edges(0, 1, 10))
    assert np.all(np.abs(h.mass - 0.1) < 0.01)


def test_histogram_smoothing_kills_zeros():
    h = build_histogram([0.1], equal_width_edges(0, 1, 10), laplace_alpha=1e-3)
    assert np.all(h.mass > 0.0)
    assert h.mass.sum() == pytest.approx(1.0)


def test_histogram_rejects_unsorted_edges():
    with pytest.raises(ValueError):
        build_histogram([0.5], [0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        build_histogram([], [0.0, 1.0])


def test_symmetric_kl_zero_iff_equal():
    edges = equal_width_edges(0, 1, 4)
    rng = np.random.default_rng(1)
    p = build_histogram(rng.uniform(0, 1, 500), edges, 1e-3)
    assert symmetric_kl(p, p) == 0.0
    q = build_histogram(rng.uniform(0.3, 1, 500), edges, 1e-3)
    assert symmetric_kl(p, q) > 0.0


def test_symmetric_kl_two_bin_closed_form():
    # masses (3/4, 1/4) against (1/4, 3/4) give (p1-q1) ln(p1 q2 / (q1 p2)) = ln 3
    edges = [0.0, 0.5, 1.0]
    p = Histogram(edges, np.array([0.75, 0.25]), laplace_alpha=1e-9)
    q = Histogram(edges, np.array([0.25, 0.75]), laplace_alpha=1e-9)
    assert symmetric_kl(p, q) == pytest.approx(np.log(3.0), rel=1e-12)


def test_symmetric_kl_is_symmetric():
    edges = equal_width_edges(-1, 1, 8)
    rng = np.random.default_rng(2)
    p = build_histogram(rng.normal(size=400), edges, 1e-3)
    q = build_histogram(rng.normal(size=400) * 0.5, edges, 1e-3)
    assert symmetric_kl(p, q) == pytest.approx(symmetric_kl(q, p), rel=1e-12)


def test_symmetric_kl_requires_matching_smoothed_histograms():
    p = build_histogram([0.5], [0.0, 1.0, 2.0], 1e-3)
    q = build_histogram([0.5], [0.0, 0.5, 2.0], 1e-3)
    with pytest.raises(ValueError):
        symmetric_kl(p, q)
    bare = build_histogram([0.5], [0.0, 1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        symmetric_kl(bare, bare)


def test_wasserstein_identical_and_shifted():
    assert wasserstein_1d([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0
    assert wasserstein_1d([0.0], [1.0]) == 1.0
    assert wasserstein_1d([0.0, 2.0], [1.0, 3.0]) == 1.0


def test_wasserstein_resamples_with_rng():
    rng = np.random.default_rng(3)
    a = rng.normal(size=500)
    b = rng.normal(size=300)
    with pytest.raises(ValueError):
        wasserstein_1d(a, b)
    d = wasserstein_1d(a, b, rng=np.random.default_rng(4))
    assert d < 0.2
    with pytest.raises(ValueError):
        wasserstein_1d([], [1.0])


def test_wasserstein_metric_properties():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b, c = rng.normal(size=(3, 40))
        dab = wasserstein_1d(a, b)
        assert dab == pytest.approx(wasserstein_1d(b, a), rel=1e-12)
        assert dab <= wasserstein_1d(a, c) + wasserstein_1d(c, b) + 1e-12


def test_mode_coverage_point_mass():
    samples = np.full((50, 2), [1.0, 0.0])
    modes = [([1.0, 0.0], 0.1, 0.5), ([0.0, 1.0], 0.1, 0.3), ([-1.0, 0.0], 0.1, 0.2)]
    assert np.array_equal(mode_coverage(samples, modes), [1.0, 0.0, 0.0])


def test_mode_coverage_zero_radius():
    rng = np.random.default_rng(6)
    samples = rng.normal(size=200)
    assert np.array_equal(mode_coverage(samples, [(0.0, 0.0, 1.0)]), [0.0])


def test_mode_coverage_matches_gaussian_window_integrals():
    spec = mixture_1d_benchmark()
    ds = sample_mixture(spec, 50_000, np.random.default_rng(7))
    modes = [(spec.means[i], 0.15, spec.weights[i]) for i in range(3)]
    got = mode_coverage(ds.points, modes)
    expected = [mixture_window_mass(spec, m, 0.15) for m in spec.means[:, 0]]
    assert np.allclose(got, expected, atol=0.01)


def test_mode_coverage_requires_modes():
    with pytest.raises(ValueError):
        mode_coverage(np.zeros(5), [])


def test_sweep_zero_error_at_identical_points():
    # the feature kernel of a point with itself is exactly 1, like the closed form
    from ballgen.rff import approx_kernel, build_feature_map

    fm = build_feature_map(2, 64, seed=8)
    x = np.array([0.3, -0.4])
    assert approx_kernel(fm, x, x) == pytest.approx(1.0, abs=1e-12)


def test_sweep_nested_pairs_monotone_max():
    small = kernel_error_sweep(2, np.ones(2), [50], 500, seed=9)[0]
    big = kernel_error_sweep(2, np.ones(2), [50], 1000, seed=9)[0]
    assert big.max_abs_error >= small.max_abs_error


def test_sweep_error_decreases_with_features(kernel_sweep_tables):
    for table in kernel_sweep_tables:
        assert table[0].num_features == 10 and table[-1].num_features == 10_000
        assert table[-1].max_abs_error < table[0].max_abs_error


def test_sweep_mean_error_scales_like_inverse_sqrt(kernel_sweep_tables):
    # log-log slope of the seed-averaged mean error vs D should sit near -1/2
    counts = [row.num_features for row in kernel_sweep_tables[0]]
    means = np.mean([[row.mean_abs_error for row in t] for t in kernel_sweep_tables], axis=0)
    slope = np.polyfit(np.log(counts), np.log(means), 1)[0]
    assert -0.65 <= slope <= -0.35


def test_sweep_validation():
    with pytest.raises(ValueError):
        kernel_error_sweep(2, np.ones(2), [], 100, seed=0)
    with pytest.raises(ValueError):
        kernel_error_sweep(2, [1.0, -1.0], [10], 100, seed=0)
