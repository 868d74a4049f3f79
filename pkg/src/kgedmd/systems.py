"""Built-in systems selectable by name.

``ou``        Ornstein-Uhlenbeck process ``dX = -alpha X dt + sqrt(2/beta) dB``.
``quadwell``  Separable quadruple well (see :func:`quadwell`).
``qho``       Quantum harmonic oscillator ``H = -hbar^2/(2m) d^2 + m w^2 x^2 / 2``.
``hydrogen``  Hydrogen atom ``H = -1/2 Laplacian - 1/|x|`` in unit constants.
``swissroll`` Kolmogorov backward operator of a KDE potential on Swiss roll data.

Reference values are eigenvalues of the system's native operator: energies for
Schroedinger systems and eigenvalues of ``-L`` for generators.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .operators import DriftDiffusionSpec, GeneratorSpec, SchrodingerSpec
from .sampling import KdePotential

__all__ = [
    "GroundState",
    "System",
    "ou",
    "quadwell",
    "qho",
    "hydrogen",
    "swissroll",
    "make_system",
    "double_well_spectrum",
    "SYSTEMS",
]


@dataclass(frozen=True)
class GroundState:
    """Strictly positive ground state ``psi0 = exp(-eta)`` with energy ``E0``."""

    eta: Callable
    grad_eta: Callable
    E0: float
    hess_eta: Callable | None = None


@dataclass(frozen=True)
class System:
    name: str
    dim: int
    generator: DriftDiffusionSpec | GeneratorSpec | None = None
    schrodinger: SchrodingerSpec | None = None
    ground_state: GroundState | None = None
    reversible: bool = True
    reference: Callable[[int], np.ndarray] | None = None
    x0: tuple | None = None
    params: dict = field(default_factory=dict)

    def generator_spec(self) -> GeneratorSpec | None:
        g = self.generator
        return g.to_generator() if isinstance(g, DriftDiffusionSpec) else g


def ou(alpha: float = 1.0, beta_inv: float = 0.5, dim: int = 1) -> System:
    """Eigenvalues of ``-L`` are ``alpha * (l_1 + ... + l_d)``."""
    def reference(n):
        vals = np.arange(n, dtype=float)
        if dim > 1:
            grids = np.meshgrid(*[vals] * dim, indexing="ij")
            vals = np.sort(sum(g.ravel() for g in grids))
        return alpha * vals[:n]

    gen = DriftDiffusionSpec(
        potential=lambda X: 0.5 * alpha * np.sum(X**2, axis=1),
        grad_potential=lambda X: alpha * X,
        beta_inv=beta_inv,
        dim=dim,
        hess_potential=lambda X: np.broadcast_to(alpha * np.eye(dim), (len(X), dim, dim)).copy(),
    )
    return System("ou", dim, generator=gen, reference=reference, x0=(0.0,) * dim,
                  params={"alpha": alpha, "beta_inv": beta_inv, "dim": dim})


def double_well_spectrum(height: float, width: float, beta_inv: float, n: int,
                         L: float = 3.0, N: int = 20000) -> np.ndarray:
    """Lowest ``n`` eigenvalues of ``-L`` for ``V(x) = height ((x/width)^2 - 1)^2``.

    Finite differences on the symmetrized (Schroedinger) form, on
    ``[-L width, L width]`` with ``N`` nodes.
    """
    x = np.linspace(-L * width, L * width, N)
    dx = x[1] - x[0]
    y = x / width
    Vp = 4 * height * y * (y**2 - 1) / width
    Vpp = 4 * height * (3 * y**2 - 1) / width**2
    # -L is unitarily equivalent to -T d^2 + Vp^2/(4T) - Vpp/2
    pot = Vp**2 / (4 * beta_inv) - 0.5 * Vpp
    diag = 2 * beta_inv / dx**2 + pot
    off = -beta_inv / dx**2 * np.ones(N - 1)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, n - 1))[0]


# Depth 1 per axis; widths fitted (least squares) so the separable spectrum
# 0, l1, l2, l1 + l2 is closest to 0, 0.400, 1.011, 1.55 at beta^-1 = 0.5.
QUADWELL_HEIGHTS = (1.0, 1.0)
QUADWELL_WIDTHS = (0.71361, 0.46364)


def quadwell(heights=QUADWELL_HEIGHTS, widths=QUADWELL_WIDTHS, beta_inv: float = 0.5) -> System:
    """``V(x) = sum_i h_i ((x_i / s_i)^2 - 1)^2`` in two dimensions.

    The four minima ``(+-s_1, +-s_2)`` sit one per quadrant.
    """
    h = np.asarray(heights, dtype=float)
    s = np.asarray(widths, dtype=float)

    def V(X):
        return np.sum(h * ((X / s) ** 2 - 1) ** 2, axis=1)

    def gradV(X):
        return 4 * h * (X / s) * ((X / s) ** 2 - 1) / s

    def hessV(X):
        diag = 4 * h * (3 * (X / s) ** 2 - 1) / s**2
        return np.einsum("ni,ij->nij", diag, np.eye(2))

    def reference(n):
        parts = [double_well_spectrum(h[i], s[i], beta_inv, n) for i in range(2)]
        vals = np.sort(np.add.outer(parts[0], parts[1]).ravel())
        return vals[:n]

    gen = DriftDiffusionSpec(V, gradV, beta_inv, 2, hess_potential=hessV)
    return System("quadwell", 2, generator=gen, reference=reference, x0=tuple(s),
                  params={"heights": tuple(h), "widths": tuple(s), "beta_inv": beta_inv})


def qho(hbar: float = 1.0, mass: float = 1.0, omega: float = 1.0) -> System:
    """One-dimensional harmonic oscillator; ``E_l = hbar omega (l + 1/2)``."""
    spec = SchrodingerSpec(hbar, mass, lambda X: 0.5 * mass * omega**2 * X[:, 0] ** 2, 1)
    k = mass * omega / hbar
    gs = GroundState(
        eta=lambda X: 0.5 * k * X[:, 0] ** 2,
        grad_eta=lambda X: k * X,
        E0=0.5 * hbar * omega,
        hess_eta=lambda X: np.full((len(X), 1, 1), k),
    )
    return System("qho", 1, schrodinger=spec, ground_state=gs,
                  reference=lambda n: hbar * omega * (np.arange(n) + 0.5), x0=(0.0,),
                  params={"hbar": hbar, "mass": mass, "omega": omega})


def _hydrogen_levels(n):
    out = []
    shell = 1
    while len(out) < n:
        out.extend([-0.5 / shell**2] * shell**2)
        shell += 1
    return np.array(out[:n])


def hydrogen() -> System:
    """Unit constants: ``W = -1/|x|``, ``psi0 ~ exp(-|x|)``, ``E_n = -1/(2 n^2)``
    with multiplicity ``n^2``.  The drift of the equivalent SDE is set to zero
    at ``|x| < 1e-12``."""

    def W(X):
        return -1.0 / np.linalg.norm(X, axis=1)

    def grad_eta(X):
        r = np.linalg.norm(X, axis=1, keepdims=True)
        return np.divide(X, r, out=np.zeros_like(X), where=r >= 1e-12)

    def hess_eta(X):
        r = np.linalg.norm(X, axis=1)
        safe = np.where(r >= 1e-12, r, 1.0)
        P = np.eye(3)[None] - np.einsum("ni,nj->nij", X, X) / safe[:, None, None] ** 2
        return np.where((r >= 1e-12)[:, None, None], P / safe[:, None, None], 0.0)

    spec = SchrodingerSpec(1.0, 1.0, W, 3)
    gs = GroundState(eta=lambda X: np.linalg.norm(X, axis=1), grad_eta=grad_eta, E0=-0.5,
                     hess_eta=hess_eta)
    return System("hydrogen", 3, schrodinger=spec, ground_state=gs, reference=_hydrogen_levels,
                  x0=(1.0, 0.0, 0.0))


def swissroll(points, kde_bandwidth: float = 1.0, floor: float = 1e-12,
              norm_dim: int | None = None) -> System:
    """``L f = -grad U . grad f + Laplacian f`` with the KDE potential ``U`` of
    ``points`` (``beta = 1``, ``sigma = sqrt(2) I``)."""
    kde = KdePotential(points, kde_bandwidth, floor, norm_dim)
    d = kde.points.shape[1]
    gen = DriftDiffusionSpec(kde.potential, kde.gradient, 1.0, d)
    return System("swissroll", d, generator=gen,
                  params={"kde_bandwidth": kde_bandwidth, "floor": floor, "norm_dim": norm_dim})


def custom(factory: str, **params) -> System:
    """Load ``module:function`` and call it with ``params``."""
    mod, _, name = factory.partition(":")
    fn = getattr(importlib.import_module(mod), name)
    system = fn(**params)
    if not isinstance(system, System):
        raise TypeError(f"{factory} did not return a System")
    return system


SYSTEMS = {"ou": ou, "quadwell": quadwell, "qho": qho, "hydrogen": hydrogen}


def make_system(name: str, **params) -> System:
    if name == "custom":
        return custom(**params)
    if name not in SYSTEMS:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)} or 'swissroll'/'custom'")
    return SYSTEMS[name](**params)

