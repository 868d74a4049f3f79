import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from kgedmd.operators import GeneratorSpec, constant_matrix, zero_vector
from kgedmd.sampling import (
    BlowUpError,
    KdePotential,
    TrajectoryConfig,
    euler_maruyama,
    euler_maruyama_ensemble,
    kde_potential_and_gradient,
    make_rng,
    sample_ball,
    sample_box,
    swiss_roll,
)
from kgedmd.systems import ou, quadwell


def test_trajectory_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(dt=0.0, steps=10)
    with pytest.raises(ValueError):
        TrajectoryConfig(dt=0.1, steps=10, stride=0)
    with pytest.raises(ValueError):
        TrajectoryConfig(dt=0.1, steps=10, burn_in=10)
    assert TrajectoryConfig(dt=0.1, steps=100, burn_in=20, stride=10).n_samples == 8


def test_static_trajectory():
    gen = GeneratorSpec(zero_vector, constant_matrix(np.zeros((2, 2))), 2)
    S = euler_maruyama(gen, TrajectoryConfig(dt=0.1, steps=50, x0=(1.0, -2.0)))
    assert S.M == 50
    np.testing.assert_array_equal(S.points, np.tile([1.0, -2.0], (50, 1)))


def test_euler_maruyama_step_formula():
    # single step by hand: x1 = x0 + b dt + sigma sqrt(dt) xi
    gen = ou(1.0, 0.5).generator_spec()
    cfg = TrajectoryConfig(dt=0.01, steps=1, x0=(0.3,), seed=4)
    xi = make_rng(4).standard_normal((1, 1))[0]
    expected = 0.3 - 0.3 * 0.01 + 1.0 * 0.1 * xi[0]
    assert euler_maruyama(gen, cfg).points[0, 0] == pytest.approx(expected, rel=1e-15)


def test_ou_stationary_variance():
    # alpha = 1, beta = 2, dt = 1e-3, 10^6 steps, burn-in 10^5 per path.  One
    # path gives the variance to about 5% (one standard deviation), so the
    # check is made on eight independent paths pooled.
    cfg = TrajectoryConfig(dt=1e-3, steps=1_000_000, burn_in=100_000, stride=10, x0=(0.0,), seed=0)
    paths = euler_maruyama_ensemble(ou(1.0, 0.5).generator_spec(), cfg, range(8))
    x = np.concatenate([p.points[:, 0] for p in paths])
    assert np.var(x) == pytest.approx(0.5, rel=0.05)


def test_ou_stationary_mean():
    # stride of three correlation times, so the retained states are close to
    # independent and the bound uses the number of retained samples
    cfg = TrajectoryConfig(dt=1e-2, steps=1000 + 3000 * 300, burn_in=1000, stride=300, x0=(0.0,), seed=0)
    x = euler_maruyama(ou(1.0, 0.5).generator_spec(), cfg).points[:, 0]
    assert abs(x.mean()) < 3 * np.sqrt(0.5 / len(x))


def test_ensemble_paths_match_single_runs():
    gen = quadwell().generator_spec()
    cfg = TrajectoryConfig(dt=1e-3, steps=5000, burn_in=100, stride=10, x0=(0.7, 0.4), seed=3)
    paths = euler_maruyama_ensemble(gen, cfg, [0, 5, 2])
    for s, p in zip([0, 5, 2], paths):
        np.testing.assert_array_equal(p.points, euler_maruyama(gen, cfg, s).points)


def test_quadwell_visits_all_quadrants():
    cfg = TrajectoryConfig(dt=1e-3, steps=20_000 + 5000 * 100, burn_in=20_000, stride=100,
                           x0=(0.7, 0.46), seed=0)
    X = euler_maruyama(quadwell().generator_spec(), cfg).points
    q = (X[:, 0] > 0) * 2 + (X[:, 1] > 0)
    assert np.bincount(q, minlength=4).min() >= 0.15 * len(X)


def test_blow_up_reports_step():
    gen = GeneratorSpec(lambda X: X**3, constant_matrix([[0.0]]), 1)
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(BlowUpError) as info:
        euler_maruyama(gen, TrajectoryConfig(dt=0.5, steps=100, x0=(2.0,)))
    assert 1 <= info.value.step <= 100


def test_trajectory_determinism_and_streams():
    gen = ou().generator_spec()
    cfg = TrajectoryConfig(dt=1e-2, steps=20_000, burn_in=100, stride=7, seed=11)
    a, b = euler_maruyama(gen, cfg), euler_maruyama(gen, cfg)
    np.testing.assert_array_equal(a.points, b.points)
    c = euler_maruyama(gen, cfg, stream=1)
    assert not np.array_equal(a.points, c.points)


def test_ball_radial_law():
    X = sample_ball(2.0, 100_000, 3, seed=1).points
    r = np.linalg.norm(X, axis=1) / 2.0
    assert r.max() <= 1.0
    assert stats.kstest(r, lambda t: np.clip(t, 0, 1) ** 3).statistic < 0.02


def test_ball_min_norm_and_reproducibility():
    a = sample_ball(20.0, 500, 3, seed=2, min_norm=1.0)
    assert np.linalg.norm(a.points, axis=1).min() >= 1.0
    np.testing.assert_array_equal(a.points, sample_ball(20.0, 500, 3, seed=2, min_norm=1.0).points)
    assert sample_ball(1.0, 1, 2, seed=0).M == 1
    with pytest.raises(ValueError):
        sample_ball(0.0, 5, 2, seed=0)


def test_box():
    X = sample_box([-5, 0], [5, 1], 40_000, seed=3).points
    assert X[:, 0].min() >= -5 and X[:, 0].max() < 5
    np.testing.assert_allclose(X.mean(axis=0), [0, 0.5], atol=0.05)
    q = (X[:, 0] > 0) * 2 + (X[:, 1] > 0.5)
    assert np.bincount(q).min() > 0.24 * len(X)
    with pytest.raises(ValueError):
        sample_box([1.0], [0.0], 5, seed=0)


def test_swiss_roll_parametrization():
    S, th = swiss_roll(2000, noise=0.0, seed=0)
    t, h = th.T
    X = S.points
    np.testing.assert_allclose(np.hypot(X[:, 0], X[:, 2]), t, atol=1e-12)
    np.testing.assert_array_equal(X[:, 1], h)
    assert t.min() >= 1.5 * np.pi and t.max() <= 4.5 * np.pi
    assert h.min() >= 0 and h.max() <= 21
    one, _ = swiss_roll(1, 0.0, 5)
    assert one.M == 1


def test_kde_single_gaussian():
    kde = KdePotential(np.zeros((1, 1)), 1.0, floor=0.0)
    for x in (-1.3, 0.0, 0.4, 2.0):
        U, g = kde_potential_and_gradient(kde, [x])
        assert U == pytest.approx(0.5 * np.log(2 * np.pi) + 0.5 * x**2, rel=1e-13)
        assert g[0] == pytest.approx(x, rel=1e-13, abs=1e-15)


def test_kde_symmetric_midpoint():
    kde = KdePotential(np.array([[-1.0, 0.0], [1.0, 0.0]]), 0.8)
    _, g = kde_potential_and_gradient(kde, [0.0, 0.0])
    np.testing.assert_allclose(g, 0, atol=1e-15)


def test_kde_norm_dim():
    P = np.random.default_rng(0).normal(size=(30, 3))
    a = KdePotential(P, 0.5)
    b = KdePotential(P, 0.5, floor=0.0, norm_dim=2)
    c = KdePotential(P, 0.5, floor=0.0)
    x = np.zeros((1, 3))
    # changing the normalization exponent shifts U by a constant
    assert c(x)[0][0] - b(x)[0][0] == pytest.approx(np.log(np.sqrt(2 * np.pi) * 0.5), rel=1e-12)
    np.testing.assert_allclose(a(x)[1], b(x)[1], rtol=1e-9)


def test_kde_floor_keeps_potential_finite():
    kde = KdePotential(np.zeros((1, 2)), 0.1)
    U, g = kde(np.array([[50.0, 50.0]]))
    assert np.isfinite(U).all() and np.isfinite(g).all()


@given(st.integers(0, 2**31), st.floats(0.3, 2.0))
def test_kde_gradient_matches_finite_differences(seed, bw):
    rng = np.random.default_rng(seed)
    kde = KdePotential(rng.normal(size=(40, 2)), bw)
    X = rng.normal(size=(50, 2))
    h = 1e-5
    fd = np.column_stack([(kde.potential(X + h * e) - kde.potential(X - h * e)) / (2 * h) for e in np.eye(2)])
    g = kde.gradient(X)
    assert np.max(np.abs(fd - g) / (1 + np.abs(g))) < 1e-5


@given(st.integers(0, 2**31), st.integers(1, 50))
def test_box_determinism(seed, M):
    np.testing.assert_array_equal(sample_box([0, 0], [1, 2], M, seed).points,
                                  sample_box([0, 0], [1, 2], M, seed).points)
