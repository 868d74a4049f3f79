"""End-to-end experiments: sample, assemble, solve, evaluate, report.

Modes
-----
``general``             ``G2 u = lam G0 u`` for the system's native operator.
``symmetric``           ``1/2 sum G1^T G1 + G0 W G0`` pencil; reversible systems only.
``schrodinger``         generators are first mapped to their Schroedinger form.
``sde-of-schrodinger``  Schroedinger systems are mapped to the equivalent
                        drift-diffusion generator; energies are ``E0 + lam``.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .eig import EigenSolution, rayleigh_residuals, solve_system
from .gram import GramSystem, SampleSet, build_general_system, build_symmetric_system
from .kernels import make_kernel
from .operators import (
    ConfigurationError,
    generator_as_T,
    generator_to_schrodinger,
    schrodinger_as_T,
    schrodinger_to_generator,
)
from .sampling import TrajectoryConfig, euler_maruyama, sample_ball, sample_box, swiss_roll
from .systems import System, make_system, swissroll

__all__ = [
    "PipelineError",
    "ExperimentReport",
    "run_experiment",
    "write_report",
    "group_multiplets",
    "cluster_metastable",
    "cluster_values",
    "convergence_study",
    "count_inversions",
]

MULTIPLET_TOL = 0.02


class PipelineError(RuntimeError):
    """A stage of an experiment failed; ``stage`` names it."""

    def __init__(self, stage, err):
        super().__init__(f"[{stage}] {type(err).__name__}: {err}")
        self.stage = stage
        self.cause = err


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    eigenvalues: np.ndarray
    energies: np.ndarray | None
    residuals: list
    timings: dict
    samples: SampleSet
    solution: EigenSolution
    sample_values: np.ndarray
    grid: np.ndarray | None = None
    grid_values: np.ndarray | None = None
    reference: np.ndarray | None = None
    multiplets: list = field(default_factory=list)
    intrinsic: np.ndarray | None = None
    system: GramSystem | None = None
    version: str = __version__

    @property
    def values(self) -> np.ndarray:
        """Reported spectrum: energies when defined, else eigenvalues of T."""
        return self.eigenvalues if self.energies is None else self.energies

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config.to_dict(),
            "eigenvalues": _complex_list(self.eigenvalues),
            "energies": None if self.energies is None else _complex_list(self.energies),
            "reference": None if self.reference is None else self.reference.tolist(),
            "multiplets": self.multiplets,
            "residuals": self.residuals,
            "timings": self.timings,
            "eps": self.solution.eps,
            "method": self.solution.method,
            "M": self.samples.M,
        }


def _complex_list(w):
    w = np.asarray(w)
    if np.iscomplexobj(w):
        return [[float(z.real), float(z.imag)] for z in w]
    return [float(z) for z in w]


def group_multiplets(values, tol: float = MULTIPLET_TOL) -> list:
    """Group sorted real parts whose neighbours differ by at most ``tol``.
    Returns ``[[mean, size], ...]``."""
    re = np.sort(np.real(np.asarray(values)))
    groups, cur = [], [re[0]] if len(re) else []
    for v in re[1:]:
        if v - cur[-1] <= tol:
            cur.append(v)
        else:
            groups.append(cur)
            cur = [v]
    if cur:
        groups.append(cur)
    return [[float(np.mean(g)), len(g)] for g in groups]


def _vec(v, d):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size == 1 and d > 1:
        v = np.full(d, v[0])
    if v.size != d:
        raise ConfigurationError(f"expected {d} components, got {v.size}")
    return v


def _build_system(cfg: ExperimentConfig, samples: SampleSet | None) -> System:
    params = dict(cfg.system_params)
    if cfg.system == "swissroll":
        return swissroll(samples.points, **params)
    return make_system(cfg.system, **params)


def _operator(cfg: ExperimentConfig, system: System):
    """Coefficients of T and the generator used for trajectory sampling."""
    if cfg.mode == "sde-of-schrodinger":
        if system.schrodinger is None or system.ground_state is None:
            raise ConfigurationError("sde-of-schrodinger mode needs a Schroedinger system with a known ground state")
        gs = system.ground_state
        dd = schrodinger_to_generator(system.schrodinger, gs.eta, gs.grad_eta, gs.E0, gs.hess_eta)
        gen = dd.to_generator()
        return generator_as_T(gen), gen, dd.energy_shift
    if system.schrodinger is not None:
        return schrodinger_as_T(system.schrodinger), None, None
    if cfg.mode == "schrodinger":
        return schrodinger_as_T(generator_to_schrodinger(system.generator)), system.generator_spec(), None
    gen = system.generator_spec()
    return generator_as_T(gen), gen, None


def _sample(cfg: ExperimentConfig, dim: int, gen):
    s = cfg.sampling
    if s.method == "box":
        return sample_box(_vec(s.lo, dim), _vec(s.hi, dim), s.M, s.seed), None
    if s.method == "ball":
        return sample_ball(s.radius, s.M, dim, s.seed, s.min_norm), None
    if s.method == "swissroll":
        return swiss_roll(s.M, s.noise, s.seed)
    if s.method == "trajectory":
        if gen is None:
            raise ConfigurationError("trajectory sampling needs a generator; use box or ball sampling")
        x0 = s.x0
        tc = TrajectoryConfig(dt=s.dt, steps=s.burn_in + s.M * s.stride, burn_in=s.burn_in,
                              stride=s.stride, x0=tuple(_vec(x0, dim)), seed=s.seed)
        return euler_maruyama(gen, tc), None
    raise ConfigurationError(f"unknown sampling method {s.method!r}")


def _grid(cfg: ExperimentConfig, samples: SampleSet):
    g = cfg.grid
    if g.kind == "none":
        return None
    if g.kind == "samples":
        return samples.points
    if g.kind == "box":
        d = samples.dim
        axes = [np.linspace(a, b, g.n) for a, b in zip(_vec(g.lo, d), _vec(g.hi, d))]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    raise ConfigurationError(f"unknown grid kind {g.kind!r}")


def run_experiment(cfg: ExperimentConfig, keep_system: bool = False) -> ExperimentReport:
    """Run one experiment.  Failures are re-raised as :class:`PipelineError`
    tagged with the stage."""
    timings = {}
    stage = "setup"
    try:
        kernel = make_kernel(cfg.kernel.kind, bandwidth=cfg.kernel.bandwidth,
                             degree=cfg.kernel.degree, offset=cfg.kernel.offset)
        pencil = cfg.mode
        if cfg.mode in ("schrodinger", "sde-of-schrodinger"):
            pencil = cfg.solver.pencil
        if pencil not in ("general", "symmetric"):
            raise ConfigurationError(f"unknown pencil {pencil!r}")

        stage = "sample"
        t = time.perf_counter()
        intrinsic = None
        if cfg.system == "swissroll":
            samples, intrinsic = _sample(cfg, 3, None)
            system = _build_system(cfg, samples)
            coeffs, gen, shift = _operator(cfg, system)
        else:
            system = _build_system(cfg, None)
            if pencil == "symmetric" and not system.reversible:
                raise ConfigurationError("symmetric mode requires a reversible generator")
            coeffs, gen, shift = _operator(cfg, system)
            if cfg.sampling.method == "trajectory" and cfg.sampling.x0 is None:
                cfg = replace(cfg, sampling=replace(cfg.sampling, x0=system.x0))
            samples, intrinsic = _sample(cfg, system.dim, gen)
        timings["sample"] = time.perf_counter() - t

        stage = "assemble"
        t = time.perf_counter()
        samples = samples.with_coefficients(coeffs)
        build = build_symmetric_system if pencil == "symmetric" else build_general_system
        gram = build(kernel, coeffs, samples, cfg.workers)
        timings["assemble"] = time.perf_counter() - t

        stage = "solve"
        t = time.perf_counter()
        sol = solve_system(gram, cfg.solver.eps, min(cfg.n_eigs, samples.M), cfg.solver.method,
                           points=samples.points, kernel=kernel)
        timings["solve"] = time.perf_counter() - t

        stage = "evaluate"
        t = time.perf_counter()
        sample_values = sol.sample_values(gram.G0)
        grid = _grid(cfg, samples)
        grid_values = None if grid is None else sol(grid)
        residuals = rayleigh_residuals(sol, gram)
        timings["evaluate"] = time.perf_counter() - t
    except PipelineError:
        raise
    except Exception as err:
        raise PipelineError(stage, err) from err

    energies = None if shift is None else shift + sol.eigenvalues
    reference = None if system.reference is None else np.asarray(system.reference(len(sol)))
    values = sol.eigenvalues if energies is None else energies
    return ExperimentReport(
        config=cfg, eigenvalues=sol.eigenvalues, energies=energies, residuals=residuals,
        timings=timings, samples=samples, solution=sol, sample_values=sample_values,
        grid=grid, grid_values=grid_values, reference=reference,
        multiplets=group_multiplets(values), intrinsic=intrinsic,
        system=gram if keep_system else None,
    )


def _write_values_csv(path, points, values):
    d = points.shape[1]
    cplx = np.iscomplexobj(values)
    header = [f"x{i}" for i in range(d)]
    for j in range(values.shape[1]):
        header += [f"phi{j}_re", f"phi{j}_im"] if cplx else [f"phi{j}"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, v in zip(points, values):
            row = [repr(float(t)) for t in x]
            for z in v:
                row += [repr(float(z.real)), repr(float(z.imag))] if cplx else [repr(float(z))]
            w.writerow(row)


def write_report(report: ExperimentReport, outdir=None) -> Path:
    """Write ``eigenvalues.json`` (deterministic: no timings),
    ``sample_values.csv``, ``eigenfunctions.csv`` (when a grid is set),
    ``intrinsic.csv`` (Swiss roll) and ``report.json``."""
    out = Path(report.config.output_dir if outdir is None else outdir)
    out.mkdir(parents=True, exist_ok=True)
    d = report.to_dict()
    eig = {k: d[k] for k in ("version", "eigenvalues", "energies", "reference", "multiplets",
                            "eps", "method", "M")}
    eig["system"] = report.config.system
    eig["mode"] = report.config.mode
    (out / "eigenvalues.json").write_text(json.dumps(eig, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_values_csv(out / "sample_values.csv", report.samples.points, report.sample_values)
    files = ["eigenvalues.json", "sample_values.csv"]
    if report.grid is not None:
        _write_values_csv(out / "eigenfunctions.csv", report.grid, report.grid_values)
        files.append("eigenfunctions.csv")
    if report.intrinsic is not None:
        np.savetxt(out / "intrinsic.csv", report.intrinsic, delimiter=",", header="t,h",
                   comments="", fmt="%.17g")
        files.append("intrinsic.csv")
    d["files"] = files + ["report.json"]
    (out / "report.json").write_text(json.dumps(d, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def cluster_values(values, k: int, seed: int = 0) -> np.ndarray:
    """k-means (k-means++ init, 50 restarts, best inertia) on the rows of
    ``values``.  Labels are renumbered by first appearance."""
    from sklearn.cluster import KMeans

    V = np.real(np.asarray(values, dtype=complex)).astype(float)
    if V.ndim == 1:
        V = V[:, None]
    if not 1 <= k <= len(V):
        raise ValueError(f"k must lie in [1, {len(V)}]")
    raw = KMeans(n_clusters=k, init="k-means++", n_init=50, random_state=seed).fit_predict(V)
    order = {}
    for lab in raw:
        order.setdefault(lab, len(order))
    return np.array([order[lab] for lab in raw], dtype=int)


def cluster_metastable(sol: EigenSolution, X: SampleSet, k: int, seed: int = 0) -> np.ndarray:
    """Metastable sets from the ``k`` dominant eigenfunctions at the samples."""
    if k > X.M:
        raise ValueError("k exceeds the number of samples")
    if len(sol) < k:
        raise ValueError(f"need at least {k} eigenpairs, have {len(sol)}")
    return cluster_values(sol(X.points)[:, :k], k, seed)


def count_inversions(values) -> int:
    """Number of consecutive increases in a sequence meant to decrease."""
    v = np.asarray(values, dtype=float)
    return int(np.sum(np.diff(v) > 0))


def convergence_study(cfg: ExperimentConfig, Ms, repeats: int = 5, n: int | None = None) -> list:
    """Mean and standard deviation of ``|lam_l - ref_l|`` over ``repeats``
    runs with seeds ``seed, seed + 1, ...`` for each sample size in ``Ms``.

    Each row holds ``M``, per-index ``mean``/``std`` lists and the overall
    ``mean_error``.
    """
    n = cfg.n_eigs if n is None else n
    system = _build_system(cfg, None) if cfg.system != "swissroll" else None
    if system is None or system.reference is None:
        raise ValueError(f"no reference eigenvalues for system {cfg.system!r}")
    ref = np.asarray(system.reference(n))
    rows = []
    for M in Ms:
        errs = []
        for r in range(repeats):
            c = replace(cfg, n_eigs=n, sampling=replace(cfg.sampling, M=int(M), seed=cfg.sampling.seed + r),
                        grid=replace(cfg.grid, kind="none"))
            rep = run_experiment(c)
            vals = np.real(rep.values)[:n]
            errs.append(np.abs(vals - ref[: len(vals)]))
        E = np.array(errs)
        rows.append({
            "M": int(M),
            "mean": E.mean(axis=0).tolist(),
            "std": E.std(axis=0).tolist(),
            "mean_error": float(E.mean()),
        })
    return rows
