"""Experiment configuration files (TOML).

Layout::

    name = "aps-demo"
    perspective = "both"          # pde | sde | both
    seed = 7
    L = 1.0
    matching = "direct"           # direct | rescaled

    [model]                       # kind, gamma, R, K, w, w_hat, lam, a
    kind = "aps"

    [initial]                     # kind, delta, amplitude
    [pde]                         # h, dt, t_final, advection, snapshots
    [sde]                         # N, dt, t_final, eps2, noise_std, noise,
                                  # boundary, a_rule, bin_width, snapshots,
                                  # trajectory_stride

Every table and key is optional except ``model.kind``; unknown keys are errors.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .core import Grid, ModelSpec, SpecError, validate_spec
from .pde import InitialCondition, SolverConfig
from .particles import SdeConfig

PERSPECTIVES = ("pde", "sde", "both")


class ConfigError(ValueError):
    """Bad configuration. ``path`` is the dotted key that failed, ``line`` the
    source line for syntax errors."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = f"{path}: " if path else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class PdeSection:
    h: float = 2e-3
    dt: float = 1e-4
    t_final: float = 1.0
    advection: str = "implicit"
    snapshots: tuple = ()


@dataclass(frozen=True)
class SdeSection:
    N: int = 300
    dt: float = 0.01
    t_final: float = 10.0
    eps2: float = 0.4
    noise_std: float = 0.1
    noise: str = "scheme"
    boundary: str = "clamp"
    a_rule: str = "fixed"
    bin_width: float | None = None
    snapshots: tuple = ()
    trajectory_stride: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ModelSpec
    name: str = "experiment"
    perspective: str = "pde"
    seed: int | None = None
    L: float = 1.0
    matching: str = "direct"
    output: str | None = None
    initial: InitialCondition = field(default_factory=InitialCondition)
    pde: PdeSection = field(default_factory=PdeSection)
    sde: SdeSection = field(default_factory=SdeSection)

    # ---- derived run configurations ----

    @property
    def grid(self) -> Grid:
        return Grid.from_width(self.L, self.pde.h)

    def sde_config(self) -> SdeConfig:
        s = self.sde
        init = "concentrated" if self.initial.kind == "concentrated" else "uniform"
        n = steps_for(s.t_final, s.dt)
        return SdeConfig(
            self.spec, N=s.N, dt=s.dt, n_steps=n, stride=max(n, 1), eps2=s.eps2, noise_std=s.noise_std,
            noise=s.noise, boundary=s.boundary, a_rule=s.a_rule, seed=self.seed or 0,
            half_length=self.L, init=init, delta=self.initial.delta,
        )

    def sde_snapshot_times(self) -> list[float]:
        return list(self.sde.snapshots) or [0.5 * self.sde.t_final, self.sde.t_final]

    def pde_spec(self) -> ModelSpec:
        if self.perspective != "sde" and self.matching == "rescaled":
            cfg = self.sde_config()
            return replace(self.spec, gamma=self.spec.gamma / cfg.diffusion)
        return self.spec

    def pde_snapshot_times(self) -> list[float]:
        if self.matching == "rescaled":
            D = self.sde_config().diffusion
            return [D * t for t in self.sde_snapshot_times()]
        return list(self.pde.snapshots) or [0.5 * self.pde.t_final, self.pde.t_final]

    def solver_config(self) -> SolverConfig:
        t_final = max(self.pde_snapshot_times())
        n = steps_for(t_final, self.pde.dt)
        return SolverConfig(
            self.pde_spec(), grid=self.grid, dt=self.pde.dt, n_steps=n, stride=max(n, 1),
            advection=self.pde.advection, initial=self.initial, seed=self.seed or 0,
        )

    def to_dict(self) -> dict:
        """Plain-data echo that ``load_config_dict`` maps back to an equal config."""
        spec = {
            "kind": self.spec.kind.value, "gamma": self.spec.gamma, "R": self.spec.R, "K": self.spec.K,
            "w": self.spec.w.value, "w_hat": self.spec.w_hat.value, "lam": self.spec.lam, "a": self.spec.a,
        }
        out = {"name": self.name, "perspective": self.perspective, "L": self.L, "matching": self.matching}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.output is not None:
            out["output"] = self.output
        out["model"] = spec
        out["initial"] = _drop_none({"kind": self.initial.kind, "delta": self.initial.delta, "amplitude": self.initial.amplitude})
        pde = asdict(self.pde)
        pde["snapshots"] = list(self.pde.snapshots)
        out["pde"] = pde
        sde = _drop_none(asdict(self.sde))
        sde["snapshots"] = list(self.sde.snapshots)
        out["sde"] = sde
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


def steps_for(t: float, dt: float) -> int:
    n = int(round(t / dt))
    if not math.isclose(n * dt, t, rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigError(f"time {t} is not a multiple of dt={dt}")
    return n


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


_TOP = {"name", "perspective", "seed", "L", "matching", "output", "model", "initial", "pde", "sde"}
_MODEL = {"kind", "gamma", "R", "K", "w", "w_hat", "lam", "a"}
_INITIAL = {"kind", "delta", "amplitude"}


def _check_keys(table, allowed, path):
    if not isinstance(table, dict):
        raise ConfigError("expected a table", path)
    for key in table:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", where)


def _section(cls, table, path):
    names = {f.name for f in fields(cls)}
    _check_keys(table, names, path)
    values = dict(table)
    if "snapshots" in values:
        snaps = values["snapshots"]
        if not isinstance(snaps, list) or not all(isinstance(t, (int, float)) and t > 0 for t in snaps):
            raise ConfigError("must be a list of positive times", f"{path}.snapshots")
        values["snapshots"] = tuple(float(t) for t in snaps)
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc), path) from None


def load_config_dict(data: dict, base_name: str = "experiment") -> ExperimentConfig:
    """Build and validate an ExperimentConfig from parsed TOML data."""
    _check_keys(data, _TOP, "")
    model = data.get("model")
    if model is None or "kind" not in model:
        raise ConfigError("model.kind is required", "model.kind")
    _check_keys(model, _MODEL, "model")
    try:
        spec = ModelSpec(**model)
    except ValueError as exc:
        raise ConfigError(str(exc), "model") from None
    initial_tab = data.get("initial", {})
    _check_keys(initial_tab, _INITIAL, "initial")
    try:
        initial = InitialCondition(**initial_tab)
    except ValueError as exc:
        raise ConfigError(str(exc), "initial") from None
    cfg = ExperimentConfig(
        spec=spec,
        name=str(data.get("name", base_name)),
        perspective=data.get("perspective", "pde"),
        seed=data.get("seed"),
        L=float(data.get("L", 1.0)),
        matching=data.get("matching", "direct"),
        output=data.get("output"),
        initial=initial,
        pde=_section(PdeSection, data.get("pde", {}), "pde"),
        sde=_section(SdeSection, data.get("sde", {}), "sde"),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.perspective not in PERSPECTIVES:
        raise ConfigError(f"must be one of {PERSPECTIVES}", "perspective")
    if cfg.matching not in ("direct", "rescaled"):
        raise ConfigError("must be 'direct' or 'rescaled'", "matching")
    stochastic = cfg.perspective != "pde" or cfg.initial.kind == "uniform-perturbed"
    if cfg.seed is None and stochastic:
        raise ConfigError("a seed is required for stochastic runs", "seed")
    if cfg.seed is not None and (not isinstance(cfg.seed, int) or cfg.seed < 0):
        raise ConfigError("must be a nonnegative integer", "seed")
    if cfg.perspective == "sde" and cfg.matching == "rescaled":
        raise ConfigError("rescaled matching needs perspective 'both'", "matching")
    try:
        if cfg.perspective != "pde":
            cfg.sde_config()
            for t in cfg.sde_snapshot_times():
                steps_for(t, cfg.sde.dt)
        if cfg.perspective != "sde":
            validate_spec(cfg.spec, cfg.grid)
            cfg.solver_config()
            for t in cfg.pde_snapshot_times():
                steps_for(t, cfg.pde.dt)
    except SpecError as exc:
        key = next(iter(exc.problems))
        if key in _MODEL:
            where = f"model.{key}"
        else:
            where = "pde.h" if key in ("h", "M") else key
        raise ConfigError(exc.problems[key], where) from None
    except ConfigError:
        raise
    except ValueError as exc:
        section = "sde" if cfg.perspective != "pde" else "pde"
        raise ConfigError(str(exc), section) from None
    if cfg.perspective == "both" and len(cfg.sde_snapshot_times()) != len(cfg.pde_snapshot_times()):
        raise ConfigError("pde and sde need the same number of snapshot times", "pde.snapshots")
    return cfg


def parse_config(path) -> ExperimentConfig:
    data = read_toml(path)
    return load_config_dict(data, Path(path).stem)


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            # older tomli puts the position only in the message
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"syntax error at line {line}: {exc}", line=line) from None
