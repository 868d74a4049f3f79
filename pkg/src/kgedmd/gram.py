"""Sample sets and Gram matrix assembly.

For samples ``x_1..x_M`` and the operator ``T`` with coefficients ``a, c, W``:

    G0[m, r] = k(x_m, x_r)
    G2[m, r] = -1/2 sum_ij a_ij(x_m) d_ij k(x_m, x_r)
               + sum_i c_i(x_m) d_i k(x_m, x_r) + W(x_m) k(x_m, x_r)
    G1[l][m, r] = sigma_l(x_m) . grad k(x_m, x_r)

with derivatives in the first kernel argument.  The empirical 1/M factors
cancel in the eigenproblem and are left out.

Assembly is split into row blocks which may be processed by a thread pool.
Every entry is produced by the same elementwise operations regardless of the
split, so the result does not depend on the number of workers.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import Kernel
from .operators import CoefficientError, Coefficients

__all__ = [
    "SampleSet",
    "GramSystem",
    "assemble_g0",
    "assemble_g1",
    "assemble_g2",
    "assemble_symmetric_lhs",
    "build_general_system",
    "build_symmetric_system",
    "write_matrix",
    "read_matrix",
    "write_matrix_csv",
]

BLOCK_ROWS = 256
MAGIC = b"KGDM"


@dataclass(frozen=True)
class SampleSet:
    """Points ``X`` of shape ``(M, d)`` plus optional cached coefficients."""

    points: np.ndarray
    a: np.ndarray | None = None
    c: np.ndarray | None = None
    W: np.ndarray | None = None
    sigma: np.ndarray | None = None
    source: str = "iid"
    seed: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("a sample set needs at least one point of shape (d,)")
        if not np.isfinite(X).all():
            raise ValueError("sample points must be finite")
        object.__setattr__(self, "points", X)
        M, d = X.shape
        for name, shape in (("a", (M, d, d)), ("c", (M, d)), ("W", (M,)), ("sigma", (M, d, d))):
            val = getattr(self, name)
            if val is not None and np.shape(val) != shape:
                raise ValueError(f"cached {name} has shape {np.shape(val)}, expected {shape}")

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.M

    def with_coefficients(self, coeffs: Coefficients) -> "SampleSet":
        """Evaluate ``coeffs`` once at every sample and cache the values."""
        try:
            a, c, W, sigma = coeffs.evaluate(self.points)
        except CoefficientError as err:
            raise CoefficientError(f"coefficient evaluation failed: {err}", err.point, err.index) from err
        return replace(self, a=a, c=c, W=W, sigma=sigma)


@dataclass(frozen=True)
class GramSystem:
    """Gram matrices of one problem.

    ``mode == "general"`` uses ``G2 u = lam G0 u``; ``mode == "symmetric"``
    uses ``1/2 sum_l G1_l^T G1_l u + G0 diag(W) G0 u = lam G0 G0 u``.
    """

    G0: np.ndarray
    mode: str = "general"
    G2: np.ndarray | None = None
    G1: list | None = None
    Wdiag: np.ndarray | None = None

    def lhs(self) -> np.ndarray:
        if self.mode == "general":
            return self.G2
        W = np.zeros(self.G0.shape[0]) if self.Wdiag is None else self.Wdiag
        return assemble_symmetric_lhs(self.G1, self.G0, W)

    def rhs(self) -> np.ndarray:
        return self.G0 if self.mode == "general" else self.G0 @ self.G0


def _row_blocks(M, block=BLOCK_ROWS):
    return [(s, min(s + block, M)) for s in range(0, M, block)]


def _assemble(fill, M, N, workers):
    out = np.empty((M, N))
    blocks = _row_blocks(M)

    def run(span):
        s, e = span
        out[s:e] = fill(s, e)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    else:
        for span in blocks:
            run(span)
    return out


def assemble_g0(kernel: Kernel, X: SampleSet, workers: int = 1) -> np.ndarray:
    P = X.points
    G0 = _assemble(lambda s, e: kernel.gram(P[s:e], P), X.M, X.M, workers)
    # enforce exact symmetry from the upper triangle
    iu = np.triu_indices(X.M, 1)
    G0.T[iu] = G0[iu]
    return G0


def assemble_g2(kernel: Kernel, coeffs: Coefficients | None, X: SampleSet, workers: int = 1) -> np.ndarray:
    """Operator Gram matrix; uses cached coefficients when present."""
    if X.a is None or X.c is None or X.W is None:
        if coeffs is None:
            raise ValueError("sample set has no cached coefficients and none were given")
        X = X.with_coefficients(coeffs)
    P, a, c, W = X.points, X.a, X.c, X.W

    def fill(s, e):
        Y = P[s:e]
        block = -0.5 * kernel.hess1_contract(Y, P, a[s:e])
        block += kernel.grad1_contract(Y, P, c[s:e])
        block += W[s:e, None] * kernel.gram(Y, P)
        return block

    return _assemble(fill, X.M, X.M, workers)


def assemble_g1(kernel: Kernel, sigma, X: SampleSet, workers: int = 1) -> list:
    """``d`` matrices ``G1[l][m, r] = sigma_l(x_m) . grad k(x_m, x_r)``.

    ``sigma`` is a field callable or ``None`` to use the cached values.
    """
    if sigma is None:
        S = X.sigma
        if S is None:
            raise ValueError("sample set has no cached sigma and none was given")
    else:
        S = np.asarray(sigma(X.points), dtype=float)
        bad = ~np.isfinite(S.reshape(X.M, -1)).all(axis=1)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise CoefficientError(f"sigma is not finite at point {i}", X.points[i], i)
    P = X.points
    ncols = S.shape[2]
    return [
        _assemble(lambda s, e, l=l: kernel.grad1_contract(P[s:e], P, S[s:e, :, l]), X.M, X.M, workers)
        for l in range(ncols)
    ]


def assemble_symmetric_lhs(g1, g0, Wvals) -> np.ndarray:
    """``1/2 sum_l G1_l^T G1_l + G0 diag(W) G0``, symmetrized exactly."""
    g0 = np.asarray(g0)
    Wvals = np.asarray(Wvals, dtype=float)
    M = g0.shape[0]
    if g0.shape != (M, M) or Wvals.shape != (M,):
        raise ValueError("dimension mismatch in symmetric pencil")
    lhs = np.zeros((M, M))
    for G in g1:
        G = np.asarray(G)
        if G.shape != (M, M):
            raise ValueError("dimension mismatch in symmetric pencil")
        lhs += 0.5 * (G.T @ G)
    if np.any(Wvals != 0):
        lhs += g0 @ (Wvals[:, None] * g0)
    return 0.5 * (lhs + lhs.T)


def build_general_system(kernel: Kernel, coeffs: Coefficients, X: SampleSet, workers: int = 1) -> GramSystem:
    return GramSystem(G0=assemble_g0(kernel, X, workers), mode="general",
                      G2=assemble_g2(kernel, coeffs, X, workers))


def build_symmetric_system(kernel: Kernel, coeffs: Coefficients, X: SampleSet, workers: int = 1) -> GramSystem:
    if X.W is None or X.sigma is None:
        X = X.with_coefficients(coeffs)
    if X.sigma is None:
        raise ValueError("symmetric mode needs a diffusion square root sigma")
    return GramSystem(G0=assemble_g0(kernel, X, workers), mode="symmetric",
                      G1=assemble_g1(kernel, None, X, workers), Wdiag=np.asarray(X.W, dtype=float))


# -- export -----------------------------------------------------------------

def write_matrix(path, A) -> None:
    """Binary layout: b"KGDM", u32 rows, u32 cols (little endian), then
    row-major float64 data."""
    A = np.ascontiguousarray(np.atleast_2d(np.asarray(A, dtype="<f8")))
    rows, cols = A.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", rows, cols))
        fh.write(A.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) != 12 or head[:4] != MAGIC:
            raise ValueError(f"{path} is not a KGDM matrix file")
        rows, cols = struct.unpack("<II", head[4:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape(rows, cols).astype(float)


def write_matrix_csv(path, A) -> None:
    np.savetxt(path, np.atleast_2d(A), delimiter=",", fmt="%.17g")
