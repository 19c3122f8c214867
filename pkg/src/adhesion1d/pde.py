"""Finite-volume solver for u_t = u_xx - gamma (u K(u))_x on [-L, L], no flux.

Time stepping is linear and semi-implicit: K(u) is frozen at the old level,
diffusion is backward Euler, and the upwind transport term is either taken
at the new level (``advection="implicit"``, default) or the old one
(``advection="explicit"``). Both variants give a tridiagonal system whose
columns sum to one, so mass is conserved to round-off.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import NEG_TOL, DensityField, Grid, ModelSpec, validate_spec
from .nonlocal_ops import DriftField, NonlocalOperator, SaturationField

log = logging.getLogger(__name__)

CFL_WARN = 0.9


class NegativityError(RuntimeError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    """``kind`` is one of uniform-perturbed, uniform, concentrated, cosine-bump,
    cosine-mode. ``delta`` is the half-width for concentrated data, ``amplitude``
    the relative noise (or mode) amplitude."""

    kind: str = "uniform-perturbed"
    delta: float | None = None
    amplitude: float = 0.1

    KINDS = ("uniform-perturbed", "uniform", "concentrated", "cosine-bump", "cosine-mode")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "concentrated" and not (self.delta and self.delta > 0):
            raise ValueError("concentrated initial data needs delta > 0")


def make_initial(descriptor: InitialCondition | str, grid: Grid, seed: int = 0) -> DensityField:
    """Initial density: a constant (1/2L or 1/2delta) with seeded relative noise,
    or one of the smooth analytic profiles."""
    if isinstance(descriptor, str):
        descriptor = InitialCondition(descriptor)
    L = grid.half_length
    x = grid.centers
    kind = descriptor.kind
    rng = np.random.default_rng(seed)
    if kind in ("uniform-perturbed", "uniform"):
        base = np.full(grid.M, 1.0 / (2 * L))
    elif kind == "concentrated":
        if descriptor.delta > L:
            raise ValueError("delta must not exceed L")
        base = np.where(np.abs(x) <= descriptor.delta, 1.0 / (2 * descriptor.delta), 0.0)
    elif kind == "cosine-bump":
        return DensityField(grid, (1.0 + np.cos(np.pi * x / L)) / (2 * L), check=False)
    else:
        # lowest Neumann eigenmode on [-L, L]
        mode = np.cos(np.pi * (x + L) / (2 * L))
        return DensityField.from_raw(grid, (1.0 + descriptor.amplitude * mode) / (2 * L))
    if kind == "uniform":
        return DensityField.from_raw(grid, base)
    noise = rng.uniform(-1.0, 1.0, size=grid.M)
    return DensityField.from_raw(grid, base * (1.0 + descriptor.amplitude * noise))


@dataclass(frozen=True)
class SolverConfig:
    spec: ModelSpec
    grid: Grid = field(default_factory=lambda: Grid.from_width(1.0, 2e-3))
    dt: float = 1e-4
    n_steps: int = 1000
    stride: int = 100
    diffusion: float = 1.0
    advection: str = "implicit"
    initial: InitialCondition = field(default_factory=InitialCondition)
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.stride < 1:
            raise ValueError("snapshot stride must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if self.advection not in ("implicit", "explicit"):
            raise ValueError("advection must be 'implicit' or 'explicit'")
        if self.diffusion != 1.0:
            raise ValueError("diffusion coefficient is fixed to 1 by the time rescaling")
        validate_spec(self.spec, self.grid)


@dataclass(frozen=True, eq=False)
class PdeState:
    u: DensityField
    t: float = 0.0
    step: int = 0
    drift: DriftField | None = None


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    step: int
    density: DensityField
    drift: DriftField
    saturation: SaturationField
    cfl: float


@dataclass
class RunResult:
    snapshots: list[Snapshot]
    mass: np.ndarray
    min_value: np.ndarray
    cfl: np.ndarray

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def upwind_face_flux(u, drift, gamma: float) -> np.ndarray:
    """Godunov fluxes at the M+1 faces; the two wall faces carry zero flux.

    Face velocity is gamma times the mean of the two adjacent cell drifts.
    """
    u = np.asarray(getattr(u, "values", u), dtype=float)
    K = np.asarray(getattr(drift, "values", drift), dtype=float)
    v = face_velocity(K, gamma)
    flux = np.zeros(u.shape[0] + 1)
    flux[1:-1] = np.where(v >= 0.0, v * u[:-1], v * u[1:])
    return flux


def face_velocity(K, gamma: float) -> np.ndarray:
    return gamma * 0.5 * (K[:-1] + K[1:])


class PdeSolver:
    def __init__(self, config: SolverConfig):
        self.config = config
        self.grid = config.grid
        self.op = NonlocalOperator(config.grid, config.spec)
        M = self.grid.M
        h = self.grid.h
        lam = config.dt / (h * h)
        # backward-Euler diffusion with closed walls
        self._diff_lower = np.full(M, -lam)
        self._diff_upper = np.full(M, -lam)
        self._diff_diag = np.full(M, 1.0 + 2.0 * lam)
        self._diff_diag[0] = self._diff_diag[-1] = 1.0 + lam
        self._diff_lower[0] = 0.0
        self._diff_upper[-1] = 0.0
        self._cfl_warned = False

    def drift(self, u) -> tuple[np.ndarray, np.ndarray]:
        return self.op.drift(u)

    def system(self, u, K):
        """Tridiagonal (lower, diag, upper, rhs) for one step from ``u`` with lagged drift ``K``."""
        cfg = self.config
        mu = cfg.dt / self.grid.h
        v = face_velocity(K, cfg.spec.gamma)
        if cfg.advection == "explicit":
            flux = np.zeros(u.shape[0] + 1)
            flux[1:-1] = np.where(v >= 0.0, v * u[:-1], v * u[1:])
            rhs = u - mu * (flux[1:] - flux[:-1])
            return self._diff_lower, self._diff_diag, self._diff_upper, rhs
        vp = np.maximum(v, 0.0)
        vm = np.minimum(v, 0.0)
        lower = self._diff_lower.copy()
        upper = self._diff_upper.copy()
        diag = self._diff_diag.copy()
        # face j+1/2 (between cells j, j+1) carries vp*u_j + vm*u_{j+1}
        diag[:-1] += mu * vp
        upper[:-1] += mu * vm
        diag[1:] -= mu * vm
        lower[1:] -= mu * vp
        return lower, diag, upper, u

    def advance(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """One step on raw values. Returns (u_new, K(u_old), S(u_old))."""
        K, S = self.drift(u)
        lower, diag, upper, rhs = self.system(u, K)
        u_sol = kernels.solve_tridiagonal(lower, diag, upper, rhs)
        if not np.all(np.isfinite(u_sol)):
            raise FloatingPointError("linear solve produced non-finite values")
        return self.conservative_update(u, u_sol, K), K, S

    def conservative_update(self, u, u_sol, K):
        """Rebuild the step in flux form from the solved state.

        Equal to ``u_sol`` up to the solver residual, but the face fluxes
        telescope, so rounding no longer accumulates in the total mass.
        """
        h = self.grid.h
        v = face_velocity(K, self.config.spec.gamma)
        carrier = u if self.config.advection == "explicit" else u_sol
        flux = np.zeros(u.shape[0] + 1)
        flux[1:-1] = (
            -(u_sol[1:] - u_sol[:-1]) / h
            + np.maximum(v, 0.0) * carrier[:-1]
            + np.minimum(v, 0.0) * carrier[1:]
        )
        return u - (self.config.dt / h) * (flux[1:] - flux[:-1])

    def cfl(self, K) -> float:
        cfg = self.config
        return float(cfg.spec.gamma * np.max(np.abs(K)) * cfg.dt / self.grid.h)

    def step(self, state: PdeState) -> PdeState:
        u_new, K, _ = self.advance(np.asarray(state.u.values))
        self._check(u_new, state.step + 1)
        return PdeState(
            DensityField(self.grid, u_new, check=False),
            state.t + self.config.dt,
            state.step + 1,
            DriftField(self.grid, K),
        )

    def _check(self, u_new, step):
        m = u_new.min()
        if m < -NEG_TOL:
            j = int(np.argmin(u_new))
            raise NegativityError(
                f"step {step}: density {m:.3e} at cell {j} (x={self.grid.centers[j]:.4f}); "
                f"reduce dt below {self.config.dt:g} or use implicit advection"
            )

    def snapshot(self, u, t, step) -> Snapshot:
        K, S = self.drift(u)
        c = self.cfl(K)
        if c > CFL_WARN and self.config.advection == "explicit" and not self._cfl_warned:
            warnings.warn(f"advective CFL {c:.2f} exceeds {CFL_WARN} with explicit transport", RuntimeWarning, stacklevel=2)
            self._cfl_warned = True
        return Snapshot(
            t,
            step,
            DensityField(self.grid, u.copy(), check=False),
            DriftField(self.grid, K),
            SaturationField.from_values(self.grid, S),
            c,
        )

    def run(self, u0: DensityField | None = None, progress=None, snapshot_steps=None) -> RunResult:
        """Integrate ``n_steps``. Snapshots are taken every ``stride`` steps, or
        exactly at ``snapshot_steps`` when given; step 0 and the last step always."""
        cfg = self.config
        wanted = None if snapshot_steps is None else {int(k) for k in snapshot_steps}
        if u0 is None:
            u0 = make_initial(cfg.initial, self.grid, cfg.seed)
        u = np.array(u0.values, dtype=float)
        h = self.grid.h
        mass = np.empty(cfg.n_steps + 1)
        min_value = np.empty(cfg.n_steps + 1)
        cfl = []
        mass[0] = u.sum() * h
        min_value[0] = u.min()
        snaps = [self.snapshot(u, 0.0, 0)]
        cfl.append(snaps[0].cfl)
        for n in range(1, cfg.n_steps + 1):
            u, _, _ = self.advance(u)
            self._check(u, n)
            mass[n] = u.sum() * h
            min_value[n] = u.min()
            take = (n % cfg.stride == 0) if wanted is None else (n in wanted)
            if take or n == cfg.n_steps:
                snap = self.snapshot(u, n * cfg.dt, n)
                snaps.append(snap)
                cfl.append(snap.cfl)
                log.debug("step %d t=%.4g mass=%.15f cfl=%.3g", n, n * cfg.dt, mass[n], snap.cfl)
                if progress is not None:
                    progress(n)
        return RunResult(snaps, mass, min_value, np.array(cfl))


def step_pde(state: PdeState, config: SolverConfig) -> PdeState:
    return PdeSolver(config).step(state)


def run_pde(config: SolverConfig, u0: DensityField | None = None) -> RunResult:
    return PdeSolver(config).run(u0)


def heat_mode_amplitude(u: DensityField, wavenumber: float, phase_shift: float = 0.0) -> float:
    """Projection coefficient of u on cos(wavenumber * (x + phase_shift)), normalised."""
    x = u.grid.centers
    mode = np.cos(wavenumber * (x + phase_shift))
    return float(np.sum(u.values * mode) / np.sum(mode * mode))


def neumann_wavenumber(L: float, n: int = 1) -> float:
    return n * math.pi / (2 * L)
