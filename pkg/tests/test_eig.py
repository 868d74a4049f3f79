import numpy as np
import pytest
from hypothesis import given, strategies as st

from kgedmd.eig import (
    EigenSolution,
    SingularPencilError,
    eval_eigenfunction,
    rayleigh_residual,
    solve_general,
    solve_symmetric,
    solve_system,
)
from kgedmd.gram import SampleSet, build_general_system, build_symmetric_system
from kgedmd.kernels import GaussianKernel
from kgedmd.operators import generator_as_T, schrodinger_as_T
from kgedmd.sampling import TrajectoryConfig, euler_maruyama, sample_box
from kgedmd.systems import ou, qho


def spd(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


@pytest.fixture(scope="module")
def qho_problem():
    X = sample_box([-5.0], [5.0], 100, 0)
    k = GaussianKernel(1.0)
    S = build_general_system(k, schrodinger_as_T(qho().schrodinger), X)
    sol = solve_system(S, 1e-8, 6, points=X.points, kernel=k)
    return X, S, sol


@pytest.fixture(scope="module")
def ou_samples():
    cfg = TrajectoryConfig(dt=5e-3, steps=2000 + 2000 * 50, burn_in=2000, stride=50, x0=(0.0,), seed=7)
    return euler_maruyama(ou().generator_spec(), cfg)


def test_identity_pencil():
    G0 = spd(6, 0)
    for method in ("truncate", "tikhonov"):
        sol = solve_general(G0, G0, eps=0.0, method=method)
        np.testing.assert_allclose(sol.eigenvalues, 1.0, atol=1e-12)


def test_zero_lhs_symmetric():
    G0 = spd(5, 1)
    for method in ("truncate", "tikhonov"):
        sol = solve_symmetric(np.zeros((5, 5)), G0, eps=1e-8, n=3, method=method)
        np.testing.assert_allclose(sol.eigenvalues, 0.0, atol=1e-12)


def test_input_checks():
    with pytest.raises(ValueError):
        solve_general(np.eye(3), np.eye(4))
    with pytest.raises(ValueError):
        solve_general(np.eye(3), np.eye(3), eps=-1.0)
    with pytest.raises(ValueError):
        solve_general(np.eye(3), np.eye(3), n=4)
    with pytest.raises(ValueError):
        solve_general(np.eye(3), np.eye(3), method="lanczos")


def test_singular_pencil_without_regularization():
    G0 = np.ones((3, 3))
    G0[0, 0] = 0.0
    with pytest.raises(SingularPencilError):
        solve_general(np.eye(3), G0, eps=0.0, method="tikhonov")
    with pytest.raises(SingularPencilError):
        solve_general(np.eye(3), -np.eye(3), eps=0.0, method="truncate")


def test_qho_levels(qho_problem):
    _, _, sol = qho_problem
    np.testing.assert_allclose(sol.eigenvalues[:4], [0.5, 1.5, 2.5, 3.5], rtol=1e-4)


def test_qho_residuals(qho_problem):
    _, S, sol = qho_problem
    assert max(rayleigh_residual(sol, i, S) for i in range(len(sol))) < 1e-6


def test_qho_ground_state_shape(qho_problem):
    _, _, sol = qho_problem
    x = np.linspace(-3, 3, 121)
    phi = np.real(sol(x[:, None], 0)[:, 0])
    ref = np.exp(-0.5 * x**2)
    phi = phi * (ref @ phi) / (phi @ phi)
    assert np.max(np.abs(phi - ref)) / ref.max() < 0.02


def test_normalization_and_phase(qho_problem):
    _, S, sol = qho_problem
    V = sol.sample_values(S.G0)
    np.testing.assert_allclose(np.mean(np.abs(V) ** 2, axis=0), 1.0, rtol=1e-10)
    pivots = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    assert np.all(np.real(pivots) > 0)
    assert np.allclose(np.imag(pivots), 0)


def test_eval_eigenfunction_single_term(qho_problem):
    X, _, sol = qho_problem
    u = np.zeros((X.M, 1))
    u[3, 0] = 1.0
    unit = EigenSolution(np.array([0.0]), u, X.points, sol.kernel)
    y = np.array([0.37])
    assert eval_eigenfunction(unit, 0, y) == pytest.approx(sol.kernel.eval(X.points[3], y))
    with pytest.raises(IndexError):
        eval_eigenfunction(unit, 1, y)
    with pytest.raises(ValueError):
        eval_eigenfunction(unit, 0, [0.0, 1.0])


def test_ou_general_on_grid():
    X = SampleSet(np.linspace(-3, 3, 200))
    k = GaussianKernel(1.0)
    S = build_general_system(k, generator_as_T(ou().generator_spec()), X)
    sol = solve_system(S, 1e-8, 4, points=X.points, kernel=k)
    np.testing.assert_allclose(np.real(sol.eigenvalues[:3]), [0, 1, 2], atol=0.01)
    x = np.linspace(-2, 2, 81)
    assert abs(np.corrcoef(np.real(sol(x[:, None], 1)[:, 0]), x)[0, 1]) > 0.999


def test_residual_exact_and_perturbed():
    G0 = spd(8, 2)
    G2 = np.random.default_rng(3).normal(size=(8, 8))
    G2 = G2 @ G2.T
    for method in ("truncate", "tikhonov"):
        sol = solve_general(G2, G0, eps=0.0, method=method)
        S = type("S", (), {"lhs": lambda self: G2, "rhs": lambda self: G0})()
        assert rayleigh_residual(sol, 0, S) < 1e-10
        base = sol.vectors[:, 0]
        d = np.random.default_rng(4).normal(size=8)
        res = []
        for t in (1e-6, 1e-4, 1e-2, 1e0):
            pert = EigenSolution(sol.eigenvalues, (base + t * d)[:, None], method=method,
                                 shift=sol.shift, basis=sol.basis)
            res.append(rayleigh_residual(pert, 0, S))
        assert np.all(np.diff(res) > 0)


def test_ordering_by_real_then_imaginary():
    # block diagonal with a rotation block gives a complex pair
    G2 = np.zeros((4, 4))
    G2[:2, :2] = [[1.0, -2.0], [2.0, 1.0]]
    G2[2, 2], G2[3, 3] = 0.5, 3.0
    sol = solve_general(G2, np.eye(4), eps=0.0)
    w = sol.eigenvalues
    np.testing.assert_allclose(w, [0.5, 1 - 2j, 1 + 2j, 3.0])


def test_symmetric_psd_and_constant_mode(ou_samples):
    k = GaussianKernel(1.0)
    co = generator_as_T(ou().generator_spec())
    S = build_symmetric_system(k, co, ou_samples)
    sol = solve_system(S, 1e-8, 6, points=ou_samples.points, kernel=k)
    w = sol.eigenvalues
    assert not np.iscomplexobj(w)
    assert w.min() >= -1e-6 * w.max()
    assert w[0] < 0.05 * w[1]
    v0 = sol.sample_values(S.G0)[:, 0]
    assert np.std(v0) / abs(np.mean(v0)) < 0.1


def test_general_and_symmetric_agree_on_ou(ou_samples):
    k = GaussianKernel(1.0)
    co = generator_as_T(ou().generator_spec())
    X = ou_samples.with_coefficients(co)
    wg = solve_system(build_general_system(k, co, X), 1e-8, 4).eigenvalues
    ws = solve_system(build_symmetric_system(k, co, X), 1e-8, 4).eigenvalues
    np.testing.assert_allclose(np.real(wg), ws, atol=0.05)
    np.testing.assert_allclose(ws, [0, 1, 2, 3], atol=0.05)


def test_regularization_continuity(qho_problem):
    _, S, _ = qho_problem
    lam = [np.real(solve_system(S, e, 4).eigenvalues) for e in (1e-6, 1e-7, 1e-8)]
    assert np.max(np.abs(lam[0] - lam[1])) < 10 * np.max(np.abs(lam[1] - lam[2])) + 1e-9


@given(st.floats(0.1, 100.0))
def test_symmetric_scale_invariance(s):
    G0 = spd(6, 5)
    L = spd(6, 6)
    a = solve_symmetric(L, G0, eps=1e-10, n=4)
    b = solve_symmetric(s**2 * L, s * G0, eps=1e-10, n=4)
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-8)
    np.testing.assert_allclose(G0 @ a.vectors, (s * G0) @ b.vectors, rtol=1e-6, atol=1e-8)


@given(st.integers(0, 10_000), st.integers(2, 9))
def test_general_sorted_and_normalized(seed, n):
    G0 = spd(n, seed)
    G2 = np.random.default_rng(seed + 1).normal(size=(n, n))
    sol = solve_general(G2, G0, eps=0.0)
    w = sol.eigenvalues
    key = list(zip(np.real(w), np.imag(w))) if np.iscomplexobj(w) else list(w)
    assert key == sorted(key)
    V = G0 @ sol.vectors
    np.testing.assert_allclose(np.mean(np.abs(V) ** 2, axis=0), 1.0, rtol=1e-8)
