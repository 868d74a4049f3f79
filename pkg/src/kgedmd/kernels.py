"""Kernels with analytic first- and second-order derivatives.

All derivatives are taken with respect to the *first* kernel argument.  Besides
pointwise evaluation (``eval``, ``grad1``, ``hess1``) every kernel provides the
block operations used during Gram matrix assembly:

``gram(X, Y)``
    ``K[n, m] = k(X[n], Y[m])``.
``grad1_contract(X, Y, V)``
    ``sum_i V[n, i] * d_i k(X[n], Y[m])``.
``hess1_contract(X, Y, A)``
    ``sum_ij A[n, i, j] * d_ij k(X[n], Y[m])``.

The block operations loop explicitly over the (small) state dimension and use
only elementwise arithmetic, so a given matrix entry is computed by the same
sequence of floating point operations no matter how rows are partitioned.
A new kernel kind only has to implement these methods; assembly code does not
change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Kernel",
    "GaussianKernel",
    "PolynomialKernel",
    "make_kernel",
    "fd_validate",
]


def _as_point(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d point, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"dimension mismatch: kernel has d={dim}, point has {x.shape[0]}")
    return x


def _as_block(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if dim in (None, 1) else X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected an (n, d) array, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"dimension mismatch: kernel has d={dim}, points have {X.shape[1]}")
    return X


class Kernel:
    """Base class. Subclasses are frozen dataclasses."""

    kind = "abstract"
    dim: int | None = None

    # pointwise API -------------------------------------------------------
    def eval(self, x, y) -> float:
        x, y = _as_point(x, self.dim), _as_point(y, self.dim)
        if x.shape != y.shape:
            raise ValueError("dimension mismatch between x and y")
        return float(self.gram(x[None, :], y[None, :])[0, 0])

    def grad1(self, x, y) -> np.ndarray:
        x, y = _as_point(x, self.dim), _as_point(y, self.dim)
        if x.shape != y.shape:
            raise ValueError("dimension mismatch between x and y")
        d = x.shape[0]
        eye = np.eye(d)[:, None, :]
        out = np.empty(d)
        for i in range(d):
            out[i] = self.grad1_contract(x[None, :], y[None, :], eye[i])[0, 0]
        return out

    def hess1(self, x, y) -> np.ndarray:
        x, y = _as_point(x, self.dim), _as_point(y, self.dim)
        if x.shape != y.shape:
            raise ValueError("dimension mismatch between x and y")
        d = x.shape[0]
        out = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                A = np.zeros((1, d, d))
                A[0, i, j] = 1.0
                out[i, j] = out[j, i] = self.hess1_contract(x[None, :], y[None, :], A)[0, 0]
        return out

    def __call__(self, X, Y=None) -> np.ndarray:
        return self.gram(X, X if Y is None else Y)

    # block API -----------------------------------------------------------
    def gram(self, X, Y) -> np.ndarray:
        raise NotImplementedError

    def grad1_contract(self, X, Y, V) -> np.ndarray:
        raise NotImplementedError

    def hess1_contract(self, X, Y, A) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    """``k(x, y) = exp(-|x - y|^2 / (2 bandwidth^2))``."""

    bandwidth: float = 1.0
    dim: int | None = None
    kind = "gaussian"

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def _diffs(self, X, Y):
        X, Y = _as_block(X, self.dim), _as_block(Y, self.dim)
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch between X and Y")
        diffs = [X[:, i, None] - Y[None, :, i] for i in range(X.shape[1])]
        sq = diffs[0] * diffs[0]
        for D in diffs[1:]:
            sq = sq + D * D
        return diffs, np.exp(sq * (-0.5 / self.bandwidth**2))

    def gram(self, X, Y):
        return self._diffs(X, Y)[1]

    def grad1_contract(self, X, Y, V):
        diffs, K = self._diffs(X, Y)
        V = np.asarray(V, dtype=float).reshape(len(diffs[0]), len(diffs))
        s = V[:, 0, None] * diffs[0]
        for i in range(1, len(diffs)):
            s = s + V[:, i, None] * diffs[i]
        return s * K * (-1.0 / self.bandwidth**2)

    def hess1_contract(self, X, Y, A):
        diffs, K = self._diffs(X, Y)
        d = len(diffs)
        A = np.asarray(A, dtype=float).reshape(len(diffs[0]), d, d)
        quad = np.zeros_like(K)
        for i in range(d):
            for j in range(d):
                quad = quad + A[:, i, j, None] * (diffs[i] * diffs[j])
        trace = np.trace(A, axis1=1, axis2=2)[:, None]
        s2 = self.bandwidth**2
        return (quad / (s2 * s2) - trace / s2) * K

    def to_dict(self):
        return {"kind": self.kind, "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class PolynomialKernel(Kernel):
    """``k(x, y) = (offset + x.y)^degree``.

    For ``degree == 1`` all second derivatives vanish and ``hess1`` returns
    zeros.
    """

    degree: int = 2
    offset: float = 1.0
    dim: int | None = None
    kind = "polynomial"

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be a positive integer")
        if self.offset < 0:
            raise ValueError("offset must be nonnegative")

    def _base(self, X, Y):
        X, Y = _as_block(X, self.dim), _as_block(Y, self.dim)
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch between X and Y")
        s = X[:, 0, None] * Y[None, :, 0]
        for i in range(1, X.shape[1]):
            s = s + X[:, i, None] * Y[None, :, i]
        return X, Y, self.offset + s

    def gram(self, X, Y):
        return self._base(X, Y)[2] ** self.degree

    def grad1_contract(self, X, Y, V):
        X, Y, s = self._base(X, Y)
        V = np.asarray(V, dtype=float).reshape(X.shape)
        vy = V[:, 0, None] * Y[None, :, 0]
        for i in range(1, X.shape[1]):
            vy = vy + V[:, i, None] * Y[None, :, i]
        return self.degree * vy * s ** (self.degree - 1)

    def hess1_contract(self, X, Y, A):
        X, Y, s = self._base(X, Y)
        q = self.degree
        if q < 2:
            return np.zeros_like(s)
        d = X.shape[1]
        A = np.asarray(A, dtype=float).reshape(X.shape[0], d, d)
        quad = np.zeros_like(s)
        for i in range(d):
            for j in range(d):
                quad = quad + A[:, i, j, None] * (Y[None, :, i] * Y[None, :, j])
        return q * (q - 1) * quad * s ** (q - 2)

    def to_dict(self):
        return {"kind": self.kind, "degree": self.degree, "offset": self.offset}


def make_kernel(kind: str, dim: int | None = None, **params) -> Kernel:
    """Build a kernel from its kind name and parameters."""
    if kind == "gaussian":
        return GaussianKernel(bandwidth=float(params.get("bandwidth", 1.0)), dim=dim)
    if kind == "polynomial":
        return PolynomialKernel(
            degree=int(params.get("degree", 2)), offset=float(params.get("offset", 1.0)), dim=dim
        )
    raise ValueError(f"unknown kernel kind {kind!r}")


def fd_validate(kernel: Kernel, x, y, h: float = 1e-5) -> tuple[float, float]:
    """Compare analytic derivatives against central finite differences.

    The gradient is checked against central differences of ``eval`` and the
    Hessian against central differences of ``grad1``.  Both schemes are
    second-order accurate.

    Returns
    -------
    (grad_err, hess_err)
        Max-norm absolute errors.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = _as_point(x, kernel.dim)
    y = _as_point(y, kernel.dim)
    d = x.shape[0]
    g_fd = np.empty(d)
    H_fd = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        g_fd[j] = (kernel.eval(x + e, y) - kernel.eval(x - e, y)) / (2 * h)
        H_fd[:, j] = (kernel.grad1(x + e, y) - kernel.grad1(x - e, y)) / (2 * h)
    grad_err = float(np.max(np.abs(kernel.grad1(x, y) - g_fd)))
    hess_err = float(np.max(np.abs(kernel.hess1(x, y) - H_fd)))
    return grad_err, hess_err
