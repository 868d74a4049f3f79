"""Training data: SDE trajectories, uniform samplers, the Swiss roll and a
kernel density estimate potential.

Random numbers come from numpy's counter-based Philox generator.  Independent
streams for parallel tasks are derived from ``(seed, stream)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gram import SampleSet
from .operators import GeneratorSpec

__all__ = [
    "BlowUpError",
    "make_rng",
    "TrajectoryConfig",
    "euler_maruyama",
    "euler_maruyama_ensemble",
    "sample_ball",
    "sample_box",
    "swiss_roll",
    "KdePotential",
    "kde_potential_and_gradient",
]

NOISE_CHUNK = 8192


class BlowUpError(FloatingPointError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for task ``stream`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    steps: int
    burn_in: int = 0
    stride: int = 1
    x0: tuple = (0.0,)
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if not 0 <= self.burn_in < self.steps:
            raise ValueError("burn_in must lie in [0, steps)")

    @property
    def n_samples(self) -> int:
        return len(range(self.burn_in + self.stride, self.steps + 1, self.stride))


def euler_maruyama(spec: GeneratorSpec, cfg: TrajectoryConfig, stream: int = 0) -> SampleSet:
    """Integrate ``dX = b dt + sigma dB`` and keep every ``stride``-th state
    after ``burn_in`` steps.

    State ``n`` (``n = 1..steps``) is retained when ``n > burn_in`` and
    ``(n - burn_in) % stride == 0``.
    """
    return euler_maruyama_ensemble(spec, cfg, [stream])[0]


def euler_maruyama_ensemble(spec: GeneratorSpec, cfg: TrajectoryConfig, streams) -> list:
    """Independent trajectories, one per RNG stream, advanced together.

    Path ``i`` is bit-identical to ``euler_maruyama(spec, cfg, streams[i])``:
    every path draws its noise from its own stream and the drift is
    evaluated row by row on the stacked states.
    """
    streams = [int(s) for s in streams]
    rngs = [make_rng(cfg.seed, s) for s in streams]
    K = len(streams)
    x = np.tile(np.array(cfg.x0, dtype=float).reshape(1, -1), (K, 1))
    d = x.shape[1]
    if d != spec.dim:
        raise ValueError(f"x0 has dimension {d}, system has {spec.dim}")
    const_sigma = getattr(spec.diffusion, "constant", None)
    sqdt = np.sqrt(cfg.dt)
    out = np.empty((K, cfg.n_samples, d))
    k = 0
    noise = None
    for n in range(1, cfg.steps + 1):
        j = (n - 1) % NOISE_CHUNK
        if j == 0:
            m = min(NOISE_CHUNK, cfg.steps - n + 1)
            noise = np.stack([r.standard_normal((m, d)) for r in rngs], axis=1)
        xi = noise[j]
        b = np.asarray(spec.drift(x))
        if const_sigma is not None:
            dW = xi @ const_sigma.T
        else:
            dW = np.einsum("kij,kj->ki", np.asarray(spec.diffusion(x)), xi)
        x = x + (b * cfg.dt + sqdt * dW)
        if not np.isfinite(x).all():
            raise BlowUpError(f"trajectory left the finite range at step {n}", step=n)
        if n > cfg.burn_in and (n - cfg.burn_in) % cfg.stride == 0:
            out[:, k] = x
            k += 1
    return [SampleSet(out[i], source="trajectory", seed=cfg.seed) for i in range(K)]


def sample_ball(radius: float, M: int, d: int, seed: int, min_norm: float = 0.0) -> SampleSet:
    """``M`` points uniform in the ``d``-ball; points with norm below
    ``min_norm`` are redrawn."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    rng = make_rng(seed)
    out = np.empty((0, d))
    while len(out) < M:
        m = M - len(out)
        g = rng.standard_normal((m, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = radius * rng.random(m) ** (1.0 / d)
        pts = g * r[:, None]
        out = np.vstack([out, pts[np.linalg.norm(pts, axis=1) >= min_norm]])
    return SampleSet(out, source="iid", seed=seed)


def sample_box(lo, hi, M: int, seed: int) -> SampleSet:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or not np.all(lo < hi):
        raise ValueError("box bounds must satisfy lo < hi componentwise")
    rng = make_rng(seed)
    return SampleSet(lo + (hi - lo) * rng.random((M, lo.size)), source="iid", seed=seed)


def swiss_roll(M: int, noise: float = 0.0, seed: int = 0, height: float = 21.0):
    """Points ``(t cos t, h, t sin t)`` with ``t ~ U[3pi/2, 9pi/2]`` and
    ``h ~ U[0, height]``.  Returns the sample set and the ``(M, 2)`` array of
    intrinsic coordinates ``(t, h)``."""
    if M < 1:
        raise ValueError("M must be positive")
    rng = make_rng(seed)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, M)
    h = rng.uniform(0.0, height, M)
    X = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    return SampleSet(X, source="iid", seed=seed), np.column_stack([t, h])


@dataclass(frozen=True)
class KdePotential:
    """``U = -log(rho + floor)`` for the Gaussian mixture density

        rho(x) = 1 / (M (sqrt(2 pi) bw)^p) sum_m exp(-|x - x_m|^2 / (2 bw^2))

    ``norm_dim`` is the exponent ``p``; it defaults to the ambient dimension.
    """

    points: np.ndarray
    bandwidth: float
    floor: float = 1e-12
    norm_dim: int | None = None

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        P = np.asarray(getattr(self.points, "points", self.points), dtype=float)
        object.__setattr__(self, "points", P if P.ndim == 2 else P[:, None])

    def density_and_gradient(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = self.points
        M, d = P.shape
        p = d if self.norm_dim is None else self.norm_dim
        norm = 1.0 / (M * (np.sqrt(2 * np.pi) * self.bandwidth) ** p)
        rho = np.empty(len(X))
        grad = np.empty((len(X), d))
        for s in range(0, len(X), 512):
            D = X[s:s + 512, None, :] - P[None, :, :]
            K = np.exp(-0.5 * np.sum(D * D, axis=-1) / self.bandwidth**2)
            rho[s:s + 512] = norm * K.sum(axis=1)
            grad[s:s + 512] = -norm / self.bandwidth**2 * np.einsum("nm,nmi->ni", K, D)
        return rho, grad

    def potential(self, X):
        return self(X)[0]

    def gradient(self, X):
        return self(X)[1]

    def __call__(self, X):
        rho, grad = self.density_and_gradient(X)
        return -np.log(rho + self.floor), -grad / (rho + self.floor)[:, None]


def kde_potential_and_gradient(kde: KdePotential, x):
    """``(U(x), grad U(x))`` at a single point."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    U, g = kde(x)
    return float(U[0]), g[0]
