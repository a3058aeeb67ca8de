import math

import numpy as np
import pytest
from scipy import stats

from metasir.errors import InsufficientInterferers
from metasir.model import NetworkParams, Realization, interference_no_fading
from metasir.point_process import (
    DEFAULT_TRUNCATION_TOL,
    SamplingConfig,
    nearest_k_distances,
    required_window_radius,
    sample_bipolar_links,
    sample_realization,
)
from metasir.rng import stream

PARAMS = NetworkParams(1.0, 4.0, 0.5)


def test_window_radius_leaves_requested_tail():
    for alpha, tol in [(4.0, 1e-4), (3.0, 1e-3), (5.0, 1e-6)]:
        p = NetworkParams(0.5, alpha, 0.7)
        rw = required_window_radius(p, tol)
        tail = 2 * math.pi * p.density * rw ** (2 - alpha) / (alpha - 2)
        assert tail == pytest.approx(tol * p.link_distance**-alpha, rel=1e-12)


def test_window_radius_rejects_bad_tol():
    with pytest.raises(ValueError):
        required_window_radius(PARAMS, 0.0)


def test_sampling_config_aggregates_only_for_tight_tolerances():
    assert SamplingConfig.for_network(PARAMS).aggregate_radius is None
    cfg = SamplingConfig.for_network(PARAMS, 1e-6)
    assert cfg.aggregate_radius == pytest.approx(required_window_radius(PARAMS, DEFAULT_TRUNCATION_TOL))
    assert cfg.window_radius > cfg.aggregate_radius
    with pytest.raises(ValueError):
        SamplingConfig(window_radius=-1.0)


def test_streams_are_counter_based():
    a = stream(5, 10).random(4)
    np.testing.assert_array_equal(a, stream(5, 10).random(4))
    assert not np.array_equal(a, stream(5, 11).random(4))
    assert not np.array_equal(a, stream(5, 10, attempt=1).random(4))
    assert not np.array_equal(a, stream(6, 10).random(4))
    with pytest.raises(ValueError):
        stream(-1, 0)
    with pytest.raises(ValueError):
        stream(2**64, 0)


def test_realization_is_pure_function_of_index():
    cfg = SamplingConfig.for_network(PARAMS, seed=3)
    a = sample_realization(PARAMS, cfg, index=7)
    b = sample_realization(PARAMS, cfg, index=7)
    np.testing.assert_array_equal(a.distances, b.distances)
    np.testing.assert_array_equal(a.angles, b.angles)
    c = sample_realization(PARAMS, cfg, index=8)
    assert a.n_explicit != c.n_explicit or not np.array_equal(a.distances, c.distances)


def test_points_lie_in_window_and_are_sorted():
    cfg = SamplingConfig(window_radius=6.0, seed=1)
    r = sample_realization(PARAMS, cfg)
    assert np.all(np.diff(r.distances) >= 0)
    assert np.all((r.distances > 0) & (r.distances <= 6.0))
    np.testing.assert_allclose(np.hypot(*r.interferer_points.T), r.distances, rtol=1e-14)


def test_point_counts_are_poisson():
    cfg = SamplingConfig(window_radius=4.0, seed=11)
    counts = np.array([sample_realization(PARAMS, cfg, i).n_explicit for i in range(400)])
    mean = PARAMS.density * math.pi * 16
    # mean and variance of a Poisson count
    assert abs(counts.mean() - mean) < 4 * math.sqrt(mean / counts.size)
    assert counts.var(ddof=1) / mean == pytest.approx(1.0, abs=0.25)


def test_points_are_uniform_in_the_disk():
    cfg = SamplingConfig(window_radius=5.0, seed=2)
    r = np.concatenate([sample_realization(PARAMS, cfg, i).distances for i in range(30)])
    phi = np.concatenate([sample_realization(PARAMS, cfg, i).angles for i in range(30)])
    assert stats.kstest((r / 5.0) ** 2, "uniform").pvalue > 0.01
    assert stats.kstest(phi / (2 * math.pi), "uniform").pvalue > 0.01


def test_far_rings_carry_the_right_mean_interference():
    cfg = SamplingConfig.for_network(PARAMS, 1e-6, seed=4)
    inner, outer = cfg.aggregate_radius, cfg.window_radius
    far_counts, far_gain = [], []
    for i in range(40):
        r = sample_realization(PARAMS, cfg, i)
        assert r.n_explicit > 0 and np.all(r.far_distances > inner * (1 - 1e-12))
        assert np.all(r.far_distances <= outer)
        far_counts.append(r.far_counts.sum())
        far_gain.append(float(r.far_counts @ r.far_distances**-4.0))
    area = math.pi * (outer**2 - inner**2) * PARAMS.density
    assert np.mean(far_counts) == pytest.approx(area, rel=2e-3)
    # Campbell: 2 pi lam int_inner^outer r^-3 dr
    expected = math.pi * PARAMS.density * (inner**-2 - outer**-2)
    assert np.mean(far_gain) == pytest.approx(expected, rel=2e-3)


def test_bipolar_links_have_fixed_length():
    cfg = SamplingConfig(window_radius=10.0, seed=9)
    tx, rx = sample_bipolar_links(PARAMS, cfg)
    assert tx.shape == rx.shape and tx.shape[1] == 2
    np.testing.assert_allclose(np.hypot(*(tx - rx).T), PARAMS.link_distance, rtol=1e-9)
    assert np.all(np.hypot(*tx.T) <= 10.0)
    tx, rx = sample_bipolar_links(PARAMS, cfg, rectangle=(8.0, 2.0))
    assert np.all(np.abs(tx[:, 0]) <= 4.0) and np.all(np.abs(tx[:, 1]) <= 1.0)


def test_nearest_k_distances():
    r = Realization.from_distances([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(nearest_k_distances(r, 2), [1.0, 2.0])
    with pytest.raises(InsufficientInterferers):
        nearest_k_distances(r, 4)



def test_mean_count_at_default_window():
    cfg = SamplingConfig.for_network(PARAMS, seed=21)
    assert cfg.window_radius == pytest.approx(math.sqrt(math.pi / 16e-4), rel=1e-12)
    counts = np.array([sample_realization(PARAMS, cfg, i).n_explicit for i in range(2000)])
    mean = math.pi * cfg.window_radius**2
    assert abs(counts.mean() - mean) < 3 * math.sqrt(mean / counts.size)


def test_window_radius_scaling():
    assert required_window_radius(PARAMS.with_density(4.0), 1e-4) == pytest.approx(
        2 * required_window_radius(PARAMS, 1e-4), rel=1e-12
    )
    assert required_window_radius(PARAMS, 1e12) < 1e-3


def test_count_dispersion():
    cfg = SamplingConfig(window_radius=6.0, seed=22)
    counts = np.array([sample_realization(PARAMS, cfg, i).n_explicit for i in range(10_000)])
    assert 0.97 <= counts.var(ddof=1) / counts.mean() <= 1.03


def test_half_disk_counts_exchangeable():
    cfg = SamplingConfig(window_radius=5.0, seed=23)
    left, right = [], []
    for i in range(10_000):
        r = sample_realization(PARAMS, cfg, i)
        x = np.cos(r.angles)
        left.append(int(np.count_nonzero(x < 0)))
        right.append(int(np.count_nonzero(x >= 0)))
    assert stats.mannwhitneyu(left, right).pvalue > 0.01


def test_link_directions_uniform():
    cfg = SamplingConfig(window_radius=math.sqrt(1e5 / math.pi), seed=24)
    tx, rx = sample_bipolar_links(PARAMS, cfg)
    d = rx - tx
    phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * math.pi)
    observed, _ = np.histogram(phi, bins=16, range=(0, 2 * math.pi))
    assert stats.chisquare(observed).pvalue > 0.01
    tx2, _ = sample_bipolar_links(PARAMS, cfg)
    np.testing.assert_array_equal(tx, tx2)


def test_contact_distance_law():
    cfg = SamplingConfig(window_radius=4.0, seed=25)
    r1 = np.array([nearest_k_distances(sample_realization(PARAMS, cfg, i), 1)[0] for i in range(100_000)])
    cdf = lambda r: 1 - np.exp(-PARAMS.density * math.pi * r**2)  # noqa: E731
    assert stats.kstest(r1, cdf).statistic <= 0.01


def _truncated_success_mean(params, theta, radius):
    # PGFL of the PPP restricted to the disk: exp(-lam int 1 - 1/(1 + theta R^a r^-a) dx)
    from scipy import integrate

    a, R = params.path_loss_exponent, params.link_distance
    f = lambda r: 2 * math.pi * r * (theta * R**a / (r**a + theta * R**a))  # noqa: E731
    val, _ = integrate.quad(f, 0, radius, limit=200)
    return math.exp(-params.density * val)


def test_truncation_bias_direction():
    exact = math.exp(-math.pi**2 / 8)
    fine = _truncated_success_mean(PARAMS, 1.0, required_window_radius(PARAMS, 1e-4))
    coarse = _truncated_success_mean(PARAMS, 1.0, required_window_radius(PARAMS, 1e-2))
    assert abs(fine / exact - 1) < 5e-3
    assert coarse > fine > exact
    assert coarse / exact - 1 > 5e-3

    from metasir.model import conditional_success

    cfg_fine = SamplingConfig.for_network(PARAMS, 1e-4, seed=26)
    cfg_coarse = SamplingConfig.for_network(PARAMS, 1e-2, seed=26)
    p_fine, p_coarse = [], []
    for i in range(3000):
        p_fine.append(conditional_success(sample_realization(PARAMS, cfg_fine, i), PARAMS, 1.0))
        p_coarse.append(conditional_success(sample_realization(PARAMS, cfg_coarse, i), PARAMS, 1.0))
    p_fine, p_coarse = np.array(p_fine), np.array(p_coarse)
    # same stream: the small window holds a subset of the large window's points
    assert np.all(p_coarse >= p_fine)
    se = p_coarse.std(ddof=1) / math.sqrt(p_coarse.size)
    assert abs(p_coarse.mean() - coarse) < 3 * se
