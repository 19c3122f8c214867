"""Histograms, empirical fields and distances between Eulerian and particle data."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import DensityField, Grid, ModelSpec
from .particles import SdeConfig, interaction_terms, saturation_from_counts


@dataclass(frozen=True, eq=False)
class Histogram:
    """Density histogram on a uniform bin mesh of [-L, L].

    ``requested_width`` keeps the bin width asked for when it had to be
    adjusted to divide 2L.
    """

    grid: Grid
    counts: np.ndarray
    requested_width: float

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def width(self) -> float:
        return self.grid.h

    @property
    def values(self) -> np.ndarray:
        return self.counts / (self.N * self.grid.h)

    density = values

    def as_density(self) -> DensityField:
        return DensityField(self.grid, self.values, check=False)


def bin_grid(bin_width: float, half_length: float = 1.0) -> Grid:
    """Mesh whose width is the divisor of 2L closest to ``bin_width``."""
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    n = max(1, int(round(2.0 * half_length / bin_width)))
    return Grid(half_length, max(n, 2))


def default_bin_width(spec: ModelSpec, N: int) -> float:
    if spec.kind.value == "local-sat":
        return 2.0 / math.sqrt(N)
    return 0.01


def histogram(positions, bin_width: float, half_length: float = 1.0) -> Histogram:
    x = np.asarray(positions, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("histogram of an empty position set")
    grid = bin_grid(bin_width, half_length)
    idx = np.floor((x + half_length) / grid.h).astype(np.int64)
    # particles clamped onto a wall land in the end bins
    idx = np.clip(idx, 0, grid.M - 1)
    counts = np.bincount(idx, minlength=grid.M)
    return Histogram(grid, counts, float(bin_width))


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Drift (per unit gamma, like DriftField) and saturation at mesh centres."""

    grid: Grid
    drift: np.ndarray
    saturation: np.ndarray


def empirical_fields(positions, spec: ModelSpec, bin_width: float = 0.01, half_length: float = 1.0) -> FieldPair:
    grid = bin_grid(bin_width, half_length)
    x = np.asarray(positions, dtype=float)
    unit = replace(spec, gamma=1.0)
    force, crowd = interaction_terms(grid.centers, x, unit)
    sat = saturation_from_counts(crowd, x.size, spec)
    return FieldPair(grid, sat * force / x.size, sat)


@dataclass(frozen=True, eq=False)
class _Field:
    grid: Grid
    values: np.ndarray


def _as_field(f, grid: Grid | None = None) -> _Field:
    if hasattr(f, "grid") and hasattr(f, "values"):
        return _Field(f.grid, np.asarray(f.values, dtype=float))
    if isinstance(f, tuple) and len(f) == 2 and isinstance(f[0], Grid):
        return _Field(f[0], np.asarray(f[1], dtype=float))
    if grid is not None:
        return _Field(grid, np.asarray(f, dtype=float))
    raise TypeError("field needs a grid: pass an object with .grid/.values or a (Grid, values) pair")


def resample(values, src: Grid, dst: Grid) -> np.ndarray:
    """Cell averages on ``dst`` of the piecewise-constant field on ``src``.

    Integrates exactly over cell overlaps, so the integral is preserved.
    """
    if not math.isclose(src.half_length, dst.half_length, rel_tol=1e-12):
        raise ValueError(f"incompatible domains: L={src.half_length} vs L={dst.half_length}")
    values = np.asarray(values, dtype=float)
    if src.M == dst.M:
        return values.copy()
    cum = np.concatenate(([0.0], np.cumsum(values * src.h)))
    at = np.interp(dst.edges, src.edges, cum)
    return np.diff(at) / dst.h


def compare_fields(A, B, grid: Grid | None = None) -> dict[str, float]:
    """L1, Linf and relative-L1 distances on A's mesh (B is resampled if needed)."""
    a = _as_field(A, grid)
    b = _as_field(B, grid)
    bv = resample(b.values, b.grid, a.grid)
    diff = np.abs(a.values - bv)
    h = a.grid.h
    l1 = float(diff.sum() * h)
    norm = float(np.abs(bv).sum() * h)
    if norm > 0:
        rel = l1 / norm
    else:
        rel = 0.0 if l1 == 0 else math.inf
    return {"L1": l1, "Linf": float(diff.max()), "relative_L1": rel}


def convergence_order(h, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.size < 3 or h.size != e.size:
        raise ValueError("need at least three refinement levels")
    if np.any(h <= 0) or np.any(e <= 0):
        raise ValueError("mesh widths and errors must be positive")
    order = np.argsort(h)[::-1]
    e_sorted = e[order]
    if np.any(np.diff(e_sorted) >= 0):
        warnings.warn("error does not decrease monotonically under refinement", RuntimeWarning, stacklevel=2)
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return float(slope)


def sample_density(u: DensityField, N: int, rng: np.random.Generator) -> np.ndarray:
    """N i.i.d. draws from a piecewise-constant density."""
    p = u.proportions / u.proportions.sum()
    cells = rng.choice(u.grid.M, size=N, p=p)
    return u.grid.edges[cells] + rng.random(N) * u.grid.h


# matched SDE -> PDE comparison: with noise sqrt(2D) dB the Fokker-Planck
# equation is u_t = D u_xx - gamma (u K)_x; the time change tau = D t makes
# the diffusion coefficient one and the interaction strength gamma / D


def matched_gamma(config: SdeConfig) -> float:
    return config.spec.gamma / config.diffusion


def matched_time(config: SdeConfig, t_sde: float) -> float:
    return config.diffusion * t_sde


def matched_spec(config: SdeConfig) -> ModelSpec:
    return replace(config.effective_spec, gamma=matched_gamma(config))


def metric_row(model: str, K: float, N: int, seed: int, time: float, metrics: dict) -> dict:
    row = {"model": model, "K": K, "N": N, "seed": seed, "time": time}
    row.update(metrics)
    return row
