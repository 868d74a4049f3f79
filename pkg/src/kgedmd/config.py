"""Experiment configuration.

Config files are UTF-8 ``key = value`` text with one section per concern::

    [experiment]
    system = qho
    mode = general
    n_eigs = 6

    [kernel]
    kind = gaussian
    bandwidth = 1.0

Every key is listed, with its default, in the dataclasses below and in the
README.  Vector values are comma separated.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

__all__ = [
    "KernelConfig",
    "SamplingConfig",
    "SolverConfig",
    "GridConfig",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
    "MODES",
]

MODES = ("general", "symmetric", "schrodinger", "sde-of-schrodinger")


@dataclass
class KernelConfig:
    kind: str = "gaussian"
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 1.0


@dataclass
class SamplingConfig:
    method: str = "box"  # box | ball | trajectory | swissroll
    M: int = 100
    seed: int = 0
    lo: tuple = (-5.0,)
    hi: tuple = (5.0,)
    radius: float = 1.0
    min_norm: float = 0.0
    dt: float = 1e-3
    burn_in: int = 10000
    stride: int = 100
    x0: tuple | None = None
    noise: float = 0.0


@dataclass
class SolverConfig:
    eps: float = 1e-8
    method: str = "truncate"  # truncate | tikhonov
    pencil: str = "general"  # pencil used by the schrodinger / sde-of-schrodinger modes


@dataclass
class GridConfig:
    kind: str = "none"  # none | box | samples
    lo: tuple = (-3.0,)
    hi: tuple = (3.0,)
    n: int = 101


@dataclass
class ExperimentConfig:
    system: str = "qho"
    mode: str = "general"
    n_eigs: int = 6
    output_dir: str = "out"
    workers: int = 1
    kernel: KernelConfig = field(default_factory=KernelConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    system_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.n_eigs < 1:
            raise ValueError("n_eigs must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _parse_value(text: str, default):
    text = text.strip()
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple) or default is None and "," in text:
        return tuple(float(v) for v in text.split(",") if v.strip())
    return text


def _parse_param(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if "," in text:
        return tuple(_parse_param(v) for v in text.split(",") if v.strip())
    return text


def _fill(cls, section: dict, name: str):
    known = {f.name: f for f in fields(cls)}
    obj = cls()
    for key, raw in section.items():
        if key not in known:
            raise ValueError(f"unknown key {key!r} in section [{name}]")
        default = getattr(obj, key)
        if key == "x0":
            value = tuple(float(v) for v in raw.split(","))
        else:
            value = _parse_value(raw, default)
        setattr(obj, key, value)
    return obj


def load_config(path) -> ExperimentConfig:
    """Read an INI config, or the config echo stored in a ``report.json``."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        return config_from_dict(data.get("config", data))
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    sections = {s: dict(parser[s]) for s in parser.sections()}
    unknown = set(sections) - {"experiment", "kernel", "sampling", "solver", "grid", "system"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    exp = sections.get("experiment", {})
    base = ExperimentConfig()
    kwargs = {}
    for key, raw in exp.items():
        if key in ("kernel", "sampling", "solver", "grid", "system_params") or not hasattr(base, key):
            raise ValueError(f"unknown key {key!r} in section [experiment]")
        kwargs[key] = _parse_value(raw, getattr(base, key))
    return ExperimentConfig(
        kernel=_fill(KernelConfig, sections.get("kernel", {}), "kernel"),
        sampling=_fill(SamplingConfig, sections.get("sampling", {}), "sampling"),
        solver=_fill(SolverConfig, sections.get("solver", {}), "solver"),
        grid=_fill(GridConfig, sections.get("grid", {}), "grid"),
        system_params={k: _parse_param(v) for k, v in sections.get("system", {}).items()},
        **kwargs,
    )


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)

    def sub(cls, key):
        vals = dict(data.pop(key, {}) or {})
        for f in fields(cls):
            if isinstance(f.default, tuple) and isinstance(vals.get(f.name), list):
                vals[f.name] = tuple(vals[f.name])
        if isinstance(vals.get("x0"), list):
            vals["x0"] = tuple(vals["x0"])
        return cls(**vals)

    kernel = sub(KernelConfig, "kernel")
    sampling = sub(SamplingConfig, "sampling")
    solver = sub(SolverConfig, "solver")
    grid = sub(GridConfig, "grid")
    params = {k: tuple(v) if isinstance(v, list) else v for k, v in (data.pop("system_params", {}) or {}).items()}
    return ExperimentConfig(kernel=kernel, sampling=sampling, solver=solver, grid=grid,
                            system_params=params, **data)
