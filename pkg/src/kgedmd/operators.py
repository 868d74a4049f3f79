"""Second-order differential operators and the transforms between them.

Every coefficient field is a vectorized callable acting on an ``(n, d)`` array
of points and returning ``(n,)`` (scalars), ``(n, d)`` (vectors) or
``(n, d, d)`` (matrices).

The library always works with the operator

    T f = -1/2 a : grad^2 f + c . grad f + W f,

i.e. with ``-L`` for Koopman generators and with ``H`` for Schroedinger
operators.  Reported eigenvalues are eigenvalues of ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "CoefficientError",
    "ConfigurationError",
    "DomainError",
    "Coefficients",
    "GeneratorSpec",
    "DriftDiffusionSpec",
    "SecondOrderSpec",
    "SchrodingerSpec",
    "constant_matrix",
    "zero_scalar",
    "zero_vector",
    "fd_jacobian",
    "eval_first_order_coeff",
    "generator_as_T",
    "schrodinger_as_T",
    "generator_to_schrodinger",
    "schrodinger_to_generator",
    "apply_schrodinger",
    "roundtrip_check",
]

Field = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-5


class CoefficientError(ValueError):
    """A coefficient field produced a non-finite value."""

    def __init__(self, message, point=None, index=None):
        super().__init__(message)
        self.point = point
        self.index = index


class ConfigurationError(ValueError):
    pass


class DomainError(ValueError):
    pass


def _points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def _check_finite(name, values, X):
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values.reshape(len(X), -1)).all(axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise CoefficientError(f"{name} is not finite at point {i}: {X[i]}", point=X[i], index=i)
    return values


def constant_matrix(A) -> Field:
    A = np.atleast_2d(np.asarray(A, dtype=float))

    def f(X):
        X = _points(X)
        return np.broadcast_to(A, (len(X),) + A.shape).copy()

    f.constant = A
    return f


def zero_scalar(X):
    return np.zeros(len(_points(X)))


def zero_vector(X):
    return np.zeros_like(_points(X))


def fd_jacobian(fun: Field, X, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of a vector field, shape ``(n, d_out, d)``.

    For a scalar field the result has shape ``(n, d)``.
    """
    X = _points(X)
    cols = []
    for j in range(X.shape[1]):
        E = np.zeros_like(X)
        E[:, j] = h
        cols.append((np.asarray(fun(X + E)) - np.asarray(fun(X - E))) / (2 * h))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class Coefficients:
    """Pointwise coefficients of ``T``: second order ``a``, first order ``c``,
    zero order ``W``, plus an optional square root ``sigma`` of ``a``
    (``a = sigma sigma^T``) used by the symmetric formulation.
    """

    a: Field
    c: Field
    W: Field
    dim: int
    sigma: Field | None = None

    def evaluate(self, X):
        X = _points(X)
        a = _check_finite("a", self.a(X), X)
        c = _check_finite("c", self.c(X), X)
        W = _check_finite("W", self.W(X), X)
        sigma = None if self.sigma is None else _check_finite("sigma", self.sigma(X), X)
        return a, c, W, sigma


@dataclass(frozen=True)
class GeneratorSpec:
    """SDE ``dX = b(X) dt + sigma(X) dB``."""

    drift: Field
    diffusion: Field
    dim: int

    def a(self, X):
        S = np.asarray(self.diffusion(_points(X)))
        return S @ np.swapaxes(S, -1, -2)

    def check_elliptic(self, X, tol=0.0):
        """Raise if ``a = sigma sigma^T`` is not positive definite at X."""
        A = self.a(X)
        lo = np.linalg.eigvalsh(A)[:, 0]
        if (lo <= tol).any():
            i = int(np.flatnonzero(lo <= tol)[0])
            raise CoefficientError(f"diffusion matrix is not positive definite at point {i}", index=i)


@dataclass(frozen=True)
class DriftDiffusionSpec:
    """Overdamped Langevin dynamics ``dX = -grad V dt + sqrt(2/beta) dB``.

    ``energy_shift`` holds the ground state energy ``E0`` when the system was
    obtained from a Schroedinger operator; Schroedinger energies are then
    ``E0 + lambda``.
    """

    potential: Field
    grad_potential: Field
    beta_inv: float
    dim: int
    hess_potential: Field | None = None
    energy_shift: float | None = None

    def __post_init__(self):
        if not self.beta_inv > 0:
            raise ValueError("beta_inv must be positive")

    def to_generator(self) -> GeneratorSpec:
        scale = np.sqrt(2.0 * self.beta_inv)
        grad = self.grad_potential
        return GeneratorSpec(
            drift=lambda X: -np.asarray(grad(_points(X))),
            diffusion=constant_matrix(scale * np.eye(self.dim)),
            dim=self.dim,
        )

    def as_second_order(self) -> "SecondOrderSpec":
        beta = 1.0 / self.beta_inv
        grad, hess, pot = self.grad_potential, self.hess_potential, self.potential
        return SecondOrderSpec(
            a=constant_matrix(2.0 * self.beta_inv * np.eye(self.dim)),
            J=zero_vector,
            W=zero_scalar,
            grad_F=lambda X: beta * np.asarray(grad(_points(X))),
            div_a=zero_vector,
            dim=self.dim,
            F=lambda X: beta * np.asarray(pot(_points(X))),
            hess_F=None if hess is None else (lambda X: beta * np.asarray(hess(_points(X)))),
        )


@dataclass(frozen=True)
class SecondOrderSpec:
    """``T = -1/2 e^F div(e^-F a grad) + J.grad + W``.

    ``div_a[i] = sum_j d_j a_ji``.  ``F`` and ``hess_F`` are optional; only the
    Schroedinger transform needs them.
    """

    a: Field
    J: Field
    W: Field
    grad_F: Field
    div_a: Field
    dim: int
    F: Field | None = None
    hess_F: Field | None = None

    def coefficients(self) -> Coefficients:
        return Coefficients(
            a=self.a, c=lambda X: eval_first_order_coeff(self, X), W=self.W, dim=self.dim
        )


@dataclass(frozen=True)
class SchrodingerSpec:
    """``H = -1/2 div(a grad) + J.grad + W`` with ``a = hbar^2/mass I``
    unless an explicit ``diffusion_matrix`` field is given.

    ``div_a`` is only needed for a non-constant ``diffusion_matrix``.
    """

    hbar: float
    mass: float
    potential: Field
    dim: int
    flow: Field | None = None
    diffusion_matrix: Field | None = None
    div_a: Field | None = None

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")

    def a(self, X):
        X = _points(X)
        if self.diffusion_matrix is not None:
            return np.asarray(self.diffusion_matrix(X))
        return np.broadcast_to(self.hbar**2 / self.mass * np.eye(self.dim), (len(X), self.dim, self.dim)).copy()

    def J(self, X):
        return zero_vector(X) if self.flow is None else np.asarray(self.flow(_points(X)))

    def divergence_a(self, X):
        if self.div_a is not None:
            return np.asarray(self.div_a(_points(X)))
        if self.diffusion_matrix is None or hasattr(self.diffusion_matrix, "constant"):
            return zero_vector(X)
        jac = fd_jacobian(self.diffusion_matrix, X)  # (n, d, d, d): d_k a_ij
        return np.einsum("njij->ni", jac)

    def as_second_order(self) -> SecondOrderSpec:
        return SecondOrderSpec(
            a=self.a, J=self.J, W=self.potential, grad_F=zero_vector,
            div_a=self.divergence_a, dim=self.dim, F=zero_scalar,
        )


def eval_first_order_coeff(spec: SecondOrderSpec, X) -> np.ndarray:
    """First-order coefficient ``c = J - 1/2 div_a + 1/2 a^T grad F``.

    Uses ``e^F d_j(e^-F a_ji) = d_j a_ji - a_ji d_j F`` so ``F`` itself is never
    exponentiated.  Accepts a single point or an ``(n, d)`` block.
    """
    single = np.asarray(X).ndim == 1
    X = _points(X)
    a = _check_finite("a", spec.a(X), X)
    J = _check_finite("J", spec.J(X), X)
    dA = _check_finite("div_a", spec.div_a(X), X)
    gF = _check_finite("grad_F", spec.grad_F(X), X)
    c = J - 0.5 * dA + 0.5 * np.einsum("nji,nj->ni", a, gF)
    return c[0] if single else c


def generator_as_T(spec: GeneratorSpec) -> Coefficients:
    """Coefficients of ``T = -L``: ``a = sigma sigma^T``, ``c = -b``, ``W = 0``."""
    return Coefficients(
        a=spec.a,
        c=lambda X: -np.asarray(spec.drift(_points(X))),
        W=zero_scalar,
        dim=spec.dim,
        sigma=spec.diffusion,
    )


def schrodinger_as_T(spec: SchrodingerSpec) -> Coefficients:
    """Coefficients of ``H``; ``sigma`` is set for the isotropic case only."""
    sigma = None
    if spec.diffusion_matrix is None:
        sigma = constant_matrix(spec.hbar / np.sqrt(spec.mass) * np.eye(spec.dim))
    elif hasattr(spec.diffusion_matrix, "constant"):
        sigma = constant_matrix(np.linalg.cholesky(spec.diffusion_matrix.constant))
    so = spec.as_second_order()
    return Coefficients(a=so.a, c=lambda X: eval_first_order_coeff(so, X), W=so.W,
                        dim=spec.dim, sigma=sigma)


def _hess_F(spec: SecondOrderSpec, X, fd_fallback: bool):
    if spec.hess_F is not None:
        return np.asarray(spec.hess_F(X))
    if not fd_fallback:
        raise ConfigurationError("no Hessian of F supplied and finite-difference fallback disabled")
    H = fd_jacobian(spec.grad_F, X)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def generator_to_schrodinger(spec, fd_fallback: bool = True) -> SchrodingerSpec:
    """Unitarily equivalent Schroedinger operator of ``-L`` (ground state
    ``exp(-F/2)`` with energy 0).

    ``W = -1/4 div(a grad F) + 1/8 grad F^T a grad F + 1/2 J.grad F``.
    """
    if isinstance(spec, DriftDiffusionSpec):
        spec = spec.as_second_order()
    so = spec

    def W(X):
        X = _points(X)
        a = np.asarray(so.a(X))
        gF = np.asarray(so.grad_F(X))
        HF = _hess_F(so, X, fd_fallback)
        # div(a grad F) = sum_ij d_i a_ij d_j F + a_ij d_ij F
        div_term = np.einsum("nj,nj->n", np.asarray(so.div_a(X)), gF) + np.einsum("nij,nij->n", a, HF)
        quad = np.einsum("ni,nij,nj->n", gF, a, gF)
        flow = np.einsum("ni,ni->n", np.asarray(so.J(X)), gF)
        return -0.25 * div_term + 0.125 * quad + 0.5 * flow

    # a = hbar^2/m I is represented by hbar = 1 and an explicit matrix field
    return SchrodingerSpec(
        hbar=1.0, mass=1.0, potential=W, dim=so.dim, flow=so.J,
        diffusion_matrix=so.a, div_a=so.div_a,
    )


def schrodinger_to_generator(spec: SchrodingerSpec, eta: Field, grad_eta: Field, E0: float,
                             hess_eta: Field | None = None) -> DriftDiffusionSpec:
    """Drift-diffusion system equivalent to ``H - E0`` for the ground state
    ``psi0 = exp(-eta)``: ``V = hbar^2/m eta`` and ``beta^-1 = hbar^2/(2m)``.
    """
    if spec.diffusion_matrix is not None and not hasattr(spec.diffusion_matrix, "constant"):
        raise ConfigurationError("only isotropic constant diffusion maps to a drift-diffusion system")
    if spec.diffusion_matrix is not None:
        A = spec.diffusion_matrix.constant
        scale = A[0, 0]
        if not np.allclose(A, scale * np.eye(spec.dim)):
            raise ConfigurationError("diffusion matrix must be a multiple of the identity")
    else:
        scale = spec.hbar**2 / spec.mass

    def V(X):
        vals = np.asarray(eta(_points(X)), dtype=float)
        if not np.isfinite(vals).all():
            raise DomainError("ground state is not strictly positive on the sample set")
        return scale * vals

    return DriftDiffusionSpec(
        potential=V,
        grad_potential=lambda X: scale * np.asarray(grad_eta(_points(X))),
        beta_inv=0.5 * scale,
        dim=spec.dim,
        hess_potential=None if hess_eta is None else (lambda X: scale * np.asarray(hess_eta(_points(X)))),
        energy_shift=float(E0),
    )


def apply_schrodinger(spec: SchrodingerSpec, psi, grad_psi, hess_psi, X) -> np.ndarray:
    """Apply ``H`` pointwise to a function given by its value, gradient and
    Hessian at ``X``."""
    X = _points(X)
    a = spec.a(X)
    div = np.einsum("ni,ni->n", spec.divergence_a(X), grad_psi) + np.einsum("nij,nij->n", a, hess_psi)
    return -0.5 * div + np.einsum("ni,ni->n", spec.J(X), grad_psi) + np.asarray(spec.potential(X)) * psi


def ground_state_residual(spec: DriftDiffusionSpec, X, fd_fallback: bool = True) -> np.ndarray:
    """``|H exp(-F/2)|`` at ``X`` for the Schroedinger operator of ``spec``."""
    X = _points(X)
    so = spec.as_second_order()
    H = generator_to_schrodinger(so, fd_fallback=fd_fallback)
    F = np.asarray(so.F(X))
    gF = np.asarray(so.grad_F(X))
    HF = _hess_F(so, X, fd_fallback)
    psi = np.exp(-0.5 * F)
    grad = -0.5 * psi[:, None] * gF
    hess = psi[:, None, None] * (0.25 * np.einsum("ni,nj->nij", gF, gF) - 0.5 * HF)
    return np.abs(apply_schrodinger(H, psi, grad, hess, X))


def roundtrip_check(spec: DriftDiffusionSpec, grid, fd_fallback: bool = True) -> float:
    """Generator -> Schroedinger -> generator -> Schroedinger on ``grid``.

    Returns the larger of the mismatches in the recovered potential ``V``
    (after removing the mean offset) and in the Schroedinger potential ``W``
    rebuilt from the recovered generator.
    """
    X = _points(getattr(grid, "points", grid))
    so = spec.as_second_order()
    H = generator_to_schrodinger(so, fd_fallback=fd_fallback)
    back = schrodinger_to_generator(
        H,
        eta=lambda Y: 0.5 * np.asarray(so.F(Y)),
        grad_eta=lambda Y: 0.5 * np.asarray(so.grad_F(Y)),
        E0=0.0,
        hess_eta=None if so.hess_F is None else (lambda Y: 0.5 * np.asarray(so.hess_F(Y))),
    )
    dV = np.asarray(back.potential(X)) - np.asarray(spec.potential(X))
    v_err = float(np.max(np.abs(dV - dV.mean())))
    H2 = generator_to_schrodinger(back, fd_fallback=fd_fallback)
    w_err = float(np.max(np.abs(np.asarray(H2.potential(X)) - np.asarray(H.potential(X)))))
    return max(v_err, w_err)
