"""Domain types shared by the Eulerian and Lagrangian sides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

MASS_TOL = 1e-10
NEG_TOL = 1e-12


class SpecError(ValueError):
    """Invalid model or solver parameters.

    ``problems`` maps field name to message; ``str()`` joins them.
    """

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.problems.items()))


class WeightKind(str, Enum):
    CONSTANT_ONE = "constant-one"
    LINEAR_DECAY = "linear-decay"

    def __call__(self, r, R: float):
        return eval_weight(self, r, R)

    def primitive(self, r, R: float):
        """Antiderivative W(r) = int_0^min(r, R) w(s) ds (vectorised)."""
        r = np.minimum(np.maximum(np.asarray(r, dtype=float), 0.0), R)
        if self is WeightKind.CONSTANT_ONE:
            return r
        return r - 0.5 * r * r / R

    @property
    def code(self) -> int:
        # integer tag understood by the compiled kernels
        return 0 if self is WeightKind.CONSTANT_ONE else 1


class ModelKind(str, Enum):
    APS = "aps"
    LOCAL_SAT = "local-sat"
    NONLOCAL_SAT = "nonlocal-sat"

    @property
    def code(self) -> int:
        return {"aps": 0, "local-sat": 1, "nonlocal-sat": 2}[self.value]


def eval_weight(kind: WeightKind | str, r, R: float):
    """Interaction weight w(r) with support [0, R).

    Accepts scalars or arrays; returns the same shape.
    """
    kind = WeightKind(kind)
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ValueError("r must be nonnegative")
    inside = r_arr < R
    if kind is WeightKind.CONSTANT_ONE:
        out = np.where(inside, 1.0, 0.0)
    else:
        out = np.where(inside, (R - r_arr) / R, 0.0)
    if np.ndim(r) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred mesh of [-L, L] with M cells."""

    half_length: float
    cell_count: int

    def __post_init__(self):
        if not self.half_length > 0:
            raise SpecError({"L": "half_length must be positive"})
        if int(self.cell_count) != self.cell_count or self.cell_count < 2:
            raise SpecError({"M": "cell_count must be an integer >= 2"})
        object.__setattr__(self, "cell_count", int(self.cell_count))

    @classmethod
    def from_width(cls, half_length: float, h: float) -> Grid:
        M = int(round(2.0 * half_length / h))
        if abs(M * h - 2.0 * half_length) > 1e-9 * half_length:
            raise SpecError({"h": f"width {h} does not divide [-{half_length}, {half_length}]"})
        return cls(half_length, M)

    @property
    def L(self) -> float:
        return self.half_length

    @property
    def M(self) -> int:
        return self.cell_count

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.cell_count

    @property
    def centers(self) -> np.ndarray:
        j = np.arange(self.cell_count, dtype=float)
        return -self.half_length + (j + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        j = np.arange(self.cell_count + 1, dtype=float)
        return -self.half_length + j * self.h

    def stencil_radius(self, R: float) -> int:
        """Integer part of R/h; exact multiples keep the floor."""
        q = R / self.h
        r = math.floor(q)
        # R/h that should be an integer but lands a hair below it
        if math.isclose(q, r + 1, rel_tol=1e-12, abs_tol=0.0):
            r += 1
        return int(r)


@dataclass(frozen=True)
class ModelSpec:
    """Drift closure and its parameters.

    ``lam`` and ``a`` only matter to the particle side; they default to the
    values the model kind implies (lam = 0 for aps, 1 otherwise; a = R).
    """

    kind: ModelKind = ModelKind.APS
    gamma: float = 1000.0
    R: float = 0.5
    K: float = 1.0
    w: WeightKind = WeightKind.LINEAR_DECAY
    w_hat: WeightKind = WeightKind.CONSTANT_ONE
    lam: int | None = None
    a: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "w", WeightKind(self.w))
        object.__setattr__(self, "w_hat", WeightKind(self.w_hat))
        if self.lam is None:
            object.__setattr__(self, "lam", 0 if self.kind is ModelKind.APS else 1)
        if self.a is None:
            object.__setattr__(self, "a", self.R)

    def with_(self, **changes) -> ModelSpec:
        return replace(self, **changes)


def validate_spec(spec: ModelSpec, grid: Grid) -> ModelSpec:
    """Return ``spec`` unchanged if consistent with ``grid``; raise SpecError otherwise.

    gamma = 0 is accepted and means drift switched off.
    """
    problems: dict[str, str] = {}
    L = grid.half_length
    if not (spec.gamma >= 0 and math.isfinite(spec.gamma)):
        problems["gamma"] = "gamma must be finite and >= 0"
    if not (0 < spec.R <= L):
        problems["R"] = f"R must be in (0, L={L}]"
    elif spec.R < grid.h:
        problems["R"] = f"R={spec.R} smaller than cell width h={grid.h}"
    if not (0 < spec.K <= 1):
        problems["K"] = "K must be in (0,1]"
    if spec.lam not in (0, 1):
        problems["lam"] = "lambda must be 0 or 1"
    elif spec.kind is ModelKind.APS and spec.lam != 0:
        problems["lam"] = "aps requires λ=0"
    elif spec.kind is not ModelKind.APS and spec.lam != 1:
        problems["lam"] = f"{spec.kind.value} requires λ=1"
    if not (0 < spec.a <= L):
        problems["a"] = f"a must be in (0, L={L}]"
    elif spec.kind is ModelKind.NONLOCAL_SAT and not math.isclose(spec.a, spec.R, rel_tol=1e-12):
        problems["a"] = "nonlocal-sat requires a=R"
    if problems:
        raise SpecError(problems)
    return spec


@dataclass(frozen=True, eq=False)
class DensityField:
    """Piecewise-constant probability density (per unit length) on a grid."""

    grid: Grid
    values: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.cell_count,):
            raise ValueError(f"expected {self.grid.cell_count} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.check:
            if not np.all(np.isfinite(v)):
                raise ValueError("density has non-finite entries")
            if v.min() < -NEG_TOL:
                raise ValueError(f"density negative: min {v.min():.3e}")
            if abs(self.mass - 1.0) > MASS_TOL:
                raise ValueError(f"density mass {self.mass!r} differs from 1")

    @classmethod
    def from_raw(cls, grid: Grid, raw) -> DensityField:
        """Normalise a nonnegative vector into a probability density."""
        raw = np.asarray(raw, dtype=float)
        if raw.min() < 0:
            raise ValueError("raw values must be nonnegative")
        total = raw.sum() * grid.h
        if not total > 0:
            raise ValueError("raw values have zero mass")
        return cls(grid, raw / total)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.h)

    @property
    def proportions(self) -> np.ndarray:
        return self.values * self.grid.h


@dataclass(frozen=True, eq=False)
class ParticleState:
    """Positions of N particles at time t, plus the noise stream each one owns."""

    positions: np.ndarray
    t: float = 0.0
    step: int = 0
    seed: int = 0
    stream_ids: np.ndarray | None = None
    half_length: float = 1.0

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)
        ids = np.arange(x.size, dtype=np.int64) if self.stream_ids is None else np.array(self.stream_ids, dtype=np.int64)
        if ids.shape != x.shape:
            raise ValueError("stream_ids must match positions")
        ids.setflags(write=False)
        object.__setattr__(self, "stream_ids", ids)
        L = self.half_length
        if x.size and (x.min() < -L or x.max() > L):
            raise ValueError(f"positions must lie in [-{L}, {L}]")

    @property
    def N(self) -> int:
        return int(self.positions.size)
