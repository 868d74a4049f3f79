"""Regularized generalized eigenproblems for the Gram pencils.

Two regularization methods are available:

``"truncate"`` (default)
    Restrict the weak eigenproblem to the eigenvectors of ``G0`` whose
    eigenvalues exceed ``eps * max eig(G0)`` (spectral cutoff).  For kernels
    with a finite-dimensional feature space this reproduces the explicit
    Galerkin (dictionary) solution.
``"tikhonov"``
    Shift the right-hand matrix by ``eps * tr(RHS) / M * I``.  Directions in
    the near null space of ``G0`` then show up as spurious eigenvalues close
    to zero, so this is mainly useful for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .kernels import Kernel

__all__ = [
    "NumericalError",
    "SingularPencilError",
    "EigenSolution",
    "solve_general",
    "solve_symmetric",
    "solve_system",
    "eval_eigenfunction",
    "rayleigh_residual",
    "rayleigh_residuals",
]


class NumericalError(RuntimeError):
    pass


class SingularPencilError(NumericalError):
    pass


@dataclass(frozen=True)
class EigenSolution:
    """Eigenvalues of ``T`` in ascending order of real part and coefficient
    vectors ``u`` (columns of ``vectors``), so that
    ``phi(y) = sum_m u_m k(x_m, y)``.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    points: np.ndarray | None = None
    kernel: Kernel | None = None
    eps: float = 0.0
    mode: str = "general"
    method: str = "truncate"
    shift: float = 0.0
    basis: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    def __call__(self, Y, index=None):
        """Evaluate eigenfunctions at the rows of ``Y``; shape ``(n, k)``."""
        Y = np.asarray(Y, dtype=float)
        Y = Y[:, None] if Y.ndim == 1 and self.points.shape[1] == 1 else np.atleast_2d(Y)
        K = self.kernel.gram(Y, self.points)
        U = self.vectors if index is None else self.vectors[:, [index]]
        return K @ U

    def sample_values(self, G0) -> np.ndarray:
        return G0 @ self.vectors


def _order(w):
    return np.lexsort((w.imag, w.real)) if np.iscomplexobj(w) else np.argsort(w, kind="stable")


def _normalize(G0, U):
    """Scale columns so that mean(|G0 u|^2) = 1 and the largest-magnitude
    entry of G0 u is positive real."""
    M = G0.shape[0]
    V = G0 @ U
    norms = np.sqrt(np.sum(np.abs(V) ** 2, axis=0) / M)
    norms[norms == 0] = 1.0
    idx = np.argmax(np.abs(V), axis=0)
    pivot = V[idx, np.arange(V.shape[1])]
    phase = np.where(np.abs(pivot) > 0, np.conj(pivot) / np.maximum(np.abs(pivot), 1e-300), 1.0)
    U = U * (phase / norms)
    if np.iscomplexobj(U) and np.all(U.imag == 0):
        U = U.real
    return U


def _check(lhs, rhs, eps, n):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    M = rhs.shape[0]
    if lhs.shape != (M, M) or rhs.shape != (M, M):
        raise ValueError("pencil matrices must be square and of equal size")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = M if n is None else int(n)
    if not 1 <= n <= M:
        raise ValueError(f"n must lie in [1, {M}]")
    return lhs, rhs, M, n


def _range_basis(G0, eps):
    lam, U = la.eigh(G0)
    keep = lam > eps * lam[-1]
    if not keep.any():
        raise SingularPencilError("no eigenvalue of G0 above the truncation threshold")
    return lam[keep], U[:, keep]


def solve_general(G2, G0, eps: float = 1e-8, n: int | None = None, method: str = "truncate",
                  **meta) -> EigenSolution:
    """Smallest-real-part eigenpairs of ``G2 u = lam G0 u``."""
    G2, G0, M, n = _check(G2, G0, eps, n)
    if method == "tikhonov":
        shift = eps * np.trace(G0) / M
        R = G0 + shift * np.eye(M)
        try:
            L = la.cholesky(R, lower=True)
        except la.LinAlgError as err:
            raise SingularPencilError(
                "regularized G0 is not positive definite; use eps > 0 or a larger eps"
            ) from err
        A = la.solve_triangular(L, la.solve_triangular(L, G2.T, lower=True).T, lower=True)
        try:
            w, Y = la.eig(A)
        except la.LinAlgError as err:
            raise NumericalError(f"eigensolver failed: {err}") from err
        sel = _order(w)[:n]
        U = la.solve_triangular(L.T, Y[:, sel], lower=False)
        basis = None
    elif method == "truncate":
        shift = 0.0
        lam, B = _range_basis(G0, eps)
        A = (B.T @ G2 @ B) / lam[:, None]
        try:
            w, Y = la.eig(A)
        except la.LinAlgError as err:
            raise NumericalError(f"eigensolver failed: {err}") from err
        sel = _order(w)[: min(n, len(w))]
        U = B @ Y[:, sel]
        basis = B
    else:
        raise ValueError(f"unknown regularization method {method!r}")
    w = w[sel]
    if np.all(w.imag == 0):
        w = w.real
    return EigenSolution(eigenvalues=w, vectors=_normalize(G0, U), eps=eps, mode="general",
                         method=method, shift=shift, basis=basis, **meta)


def solve_symmetric(lhs, G0, eps: float = 1e-8, n: int | None = None, method: str = "truncate",
                    **meta) -> EigenSolution:
    """Smallest eigenpairs of ``lhs u = lam G0 G0 u`` (``lhs`` symmetric)."""
    lhs, G0, M, n = _check(lhs, G0, eps, n)
    if method == "tikhonov":
        R = G0 @ G0
        R = 0.5 * (R + R.T)
        shift = eps * np.trace(R) / M
        R[np.diag_indices(M)] += shift
        try:
            w, U = la.eigh(lhs, R, subset_by_index=[0, n - 1])
        except la.LinAlgError as err:
            raise SingularPencilError(
                f"symmetric pencil solve failed ({err}); use eps > 0 or a larger eps"
            ) from err
        basis = None
    elif method == "truncate":
        shift = 0.0
        lam, B = _range_basis(G0, eps)
        P = B / lam  # u = P alpha gives G0 u = B alpha
        S = P.T @ lhs @ P
        S = 0.5 * (S + S.T)
        k = min(n, len(lam))
        w, Y = la.eigh(S, subset_by_index=[0, k - 1])
        U = P @ Y
        basis = P
    else:
        raise ValueError(f"unknown regularization method {method!r}")
    return EigenSolution(eigenvalues=w, vectors=_normalize(G0, U), eps=eps, mode="symmetric",
                         method=method, shift=shift, basis=basis, **meta)


def solve_system(system, eps: float = 1e-8, n: int | None = None, method: str = "truncate",
                 **meta) -> EigenSolution:
    if system.mode == "general":
        return solve_general(system.G2, system.G0, eps, n, method, **meta)
    return solve_symmetric(system.lhs(), system.G0, eps, n, method, **meta)


def eval_eigenfunction(sol: EigenSolution, index: int, y):
    """``phi(y) = sum_m u_m k(x_m, y)`` for a single point ``y``."""
    if not 0 <= index < sol.vectors.shape[1]:
        raise IndexError(f"eigenpair index {index} out of range")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != sol.points.shape[1]:
        raise ValueError("dimension mismatch between y and the samples")
    return sol(y[None, :], index)[0, 0]


def rayleigh_residual(sol: EigenSolution, index: int, system) -> float:
    """``|(LHS - lam RHS) u| / |RHS u|`` for the pencil actually solved.

    For the truncated method the residual is measured in the projected
    (Galerkin) sense, against the retained ``G0`` eigenvectors.
    """
    return rayleigh_residuals(sol, system, [index])[0]


def rayleigh_residuals(sol: EigenSolution, system, indices=None) -> list:
    """:func:`rayleigh_residual` for several eigenpairs, building the pencil once."""
    lhs, rhs = system.lhs(), system.rhs()
    indices = range(len(sol)) if indices is None else indices
    out = []
    for index in indices:
        u = sol.vectors[:, index]
        lam = sol.eigenvalues[index]
        if sol.method == "truncate":
            r = sol.basis.T @ (lhs @ u - lam * (rhs @ u))
            out.append(float(np.linalg.norm(r) / np.linalg.norm(sol.basis.T @ (rhs @ u))))
        else:
            Ru = rhs @ u + sol.shift * u
            out.append(float(np.linalg.norm(lhs @ u - lam * Ru) / np.linalg.norm(Ru)))
    return out
