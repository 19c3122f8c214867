"""Explicit gain/loss balance over mesh cells.

Cells jump only to adjacent intervals; the jump probabilities are nonlocal
sums over an integer stencil of r = floor(R/h) cells. The stepper is meant
as an oracle at small dt and short horizons, not as a production solver.

Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DensityField, Grid, ModelKind, ModelSpec, WeightKind, eval_weight, validate_spec

DIRECTIONS = ("into-from-left", "into-from-right", "out-left", "out-right")
SUM_TOL = 1e-12


class MasterStepError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ProportionVector:
    grid: Grid
    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        if s.shape != (self.grid.M,):
            raise ValueError("proportion vector does not match grid")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_density(cls, u: DensityField) -> ProportionVector:
        return cls(u.grid, u.values * u.grid.h)

    def to_density(self) -> DensityField:
        return DensityField(self.grid, self.s / self.grid.h, check=False)

    @property
    def total(self) -> float:
        return float(self.s.sum())


class _Stencils:
    """Integer-stencil weights for one (grid, spec)."""

    def __init__(self, grid: Grid, spec: ModelSpec):
        validate_spec(spec, grid)
        self.grid = grid
        self.spec = spec
        h = grid.h
        r = grid.stencil_radius(spec.R)
        self.r = r
        m = np.arange(r + 2, dtype=float)
        # attraction sums start one cell away from the moving cell: m = 1..r+1
        self.side = eval_weight(spec.w, m * h, spec.R)
        self.side[0] = 0.0
        # crowding window i = k-r..k+r, centre split over both halves;
        # with constant w_hat every cell of the window counts fully
        if spec.w_hat is WeightKind.CONSTANT_ONE:
            what = np.ones(r + 1)
        else:
            what = eval_weight(spec.w_hat, m[: r + 1] * h, spec.R)
        what[0] *= 0.5
        self.window = what

    def side_sums(self, s):
        right, left = kernels.one_sided_sums(s, self.side)
        return left, right

    def crowding(self, s):
        plus, minus = kernels.one_sided_sums(s, self.window)
        return plus + minus

    def move_probabilities(self, s):
        """(P_left, P_right): probability per unit time that a cell in I_k jumps to I_{k-1} / I_{k+1}."""
        s = np.ascontiguousarray(s, dtype=float)
        left, right = self.side_sums(s)
        kind = self.spec.kind
        if kind is ModelKind.APS:
            pl, pr = left, right
        elif kind is ModelKind.LOCAL_SAT:
            coef = 1.0 - (s / self.grid.h) / self.spec.K
            pl, pr = coef * left, coef * right
        else:
            coef = 1.0 - self.crowding(s) / self.spec.K
            pos = np.maximum(coef, 0.0)
            neg = np.minimum(coef, 0.0)
            # repulsion pushes away from the opposite side's crowd
            pl = -neg * right + pos * left
            pr = -neg * left + pos * right
        pl = pl.copy()
        pr = pr.copy()
        pl[0] = 0.0
        pr[-1] = 0.0
        return pl, pr


def transition_probabilities(s: ProportionVector, j: int, direction: str, spec: ModelSpec) -> float:
    """Jump probability associated with cell ``j``.

    ``into-from-left`` is the probability that a cell in I_{j-1} moves to I_j,
    ``out-right`` that a cell in I_j moves to I_{j+1}, and so on. A source cell
    outside the domain gives 0.
    """
    M = s.grid.M
    if not 0 <= j < M:
        raise IndexError(f"cell index {j} outside 0..{M - 1}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    pl, pr = _Stencils(s.grid, spec).move_probabilities(s.s)
    if direction == "into-from-left":
        return float(pr[j - 1]) if j > 0 else 0.0
    if direction == "into-from-right":
        return float(pl[j + 1]) if j < M - 1 else 0.0
    if direction == "out-left":
        return float(pl[j])
    return float(pr[j])


def _balance_from_faces(net_right):
    """Per-cell gain minus loss from the net rightward transfer across interior faces."""
    out = np.zeros(net_right.shape[0] + 1)
    out[:-1] -= net_right
    out[1:] += net_right
    return out


def interaction_balance(s: ProportionVector, spec: ModelSpec, _st: _Stencils | None = None) -> np.ndarray:
    st = _st or _Stencils(s.grid, spec)
    pl, pr = st.move_probabilities(s.s)
    net = s.s[:-1] * pr[:-1] - s.s[1:] * pl[1:]
    return _balance_from_faces(net)


def diffusion_balance(s: ProportionVector, p: float) -> np.ndarray:
    """(p/2)(s_{j+1} + s_{j-1}) - p s_j with reflecting walls."""
    if not 0 < p <= 1:
        raise ValueError("jump probability p must be in (0, 1]")
    net = 0.5 * p * (s.s[:-1] - s.s[1:])
    return _balance_from_faces(net)


def frequencies(grid: Grid, spec: ModelSpec, p: float = 0.5, alpha_diff: float = 1.0) -> tuple[float, float]:
    """(Q_diff, Q_int) = (alpha_diff/h^2, alpha_int/h) with alpha_int set by gamma."""
    alpha_int = spec.gamma * p * alpha_diff / 2.0
    return alpha_diff / grid.h**2, alpha_int / grid.h


def pde_time_factor(p: float = 0.5, alpha_diff: float = 1.0) -> float:
    """Master-equation time t corresponds to PDE time factor * t."""
    return p * alpha_diff / 2.0


def step_master(
    s: ProportionVector,
    dt: float,
    p: float,
    Q_diff: float,
    Q_int: float,
    spec: ModelSpec,
    _st: _Stencils | None = None,
) -> ProportionVector:
    if dt == 0:
        return s
    rate = Q_diff * diffusion_balance(s, p) + Q_int * interaction_balance(s, spec, _st)
    new = s.s + dt * rate
    if new.min() < 0.0:
        j = int(np.argmin(new))
        # fastest admissible step for the offending cell
        out = -rate[j]
        suggestion = s.s[j] / out if out > 0 else dt / 2
        raise MasterStepError(f"cell {j}: proportion {new[j]:.3e} < 0; use dt <= {suggestion:.3e}")
    return ProportionVector(s.grid, new)


def stable_dt(grid: Grid, spec: ModelSpec, s: np.ndarray, p: float = 0.5, alpha_diff: float = 1.0) -> float:
    """Largest dt keeping every cell's outflow below its content for state ``s``."""
    Q_diff, Q_int = frequencies(grid, spec, p, alpha_diff)
    pl, pr = _Stencils(grid, spec).move_probabilities(s)
    out_rate = Q_diff * p + Q_int * np.max(np.abs(pl) + np.abs(pr))
    return 1.0 / out_rate


def run_master(
    u0: DensityField,
    spec: ModelSpec,
    t_final: float,
    dt: float | None = None,
    p: float = 0.5,
    alpha_diff: float = 1.0,
    safety: float = 0.5,
) -> ProportionVector:
    """Integrate to master time ``t_final``. Default dt is ``safety`` times the
    initial admissible step; the last step is shortened to land exactly."""
    s = ProportionVector.from_density(u0)
    st = _Stencils(u0.grid, spec)
    Q_diff, Q_int = frequencies(u0.grid, spec, p, alpha_diff)
    if dt is None:
        dt = safety * stable_dt(u0.grid, spec, s.s, p, alpha_diff)
    n = int(np.ceil(t_final / dt - 1e-12))
    t = 0.0
    for k in range(n):
        step = min(dt, t_final - t)
        s = step_master(s, step, p, Q_diff, Q_int, spec, st)
        t += step
    return s


def limit_operator(u: np.ndarray, grid: Grid, spec: ModelSpec) -> np.ndarray:
    """Discrete transport divergence T^h built from the fractional-window
    operators: backward difference of u S G^+ minus forward difference of u S G^-.
    Used to check interaction_balance ~ -h^2 T^h."""
    from .nonlocal_ops import NonlocalOperator

    op = NonlocalOperator(grid, spec)
    plus, minus = op.directional(u)
    S = op.saturation(u)
    h = grid.h
    a = u * S * plus
    b = u * S * minus
    T = np.full(u.shape, np.nan)
    T[1:-1] = (a[1:-1] - a[:-2]) / h - (b[2:] - b[1:-1]) / h
    return T
