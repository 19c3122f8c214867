"""Nonlocal integral operators on a piecewise-constant density.

Every operator is a one-sided weighted integral of ``u`` over
``[x, x+R]`` or ``[x-R, x]`` intersected with the domain. The weight is
integrated exactly over each cell's overlap with the window, so the
quadrature is second order in h and continuous in R.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .core import DensityField, Grid, ModelKind, ModelSpec, WeightKind, validate_spec


@dataclass(frozen=True, eq=False)
class DriftField:
    grid: Grid
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SaturationField:
    grid: Grid
    values: np.ndarray
    positive: np.ndarray
    negative: np.ndarray

    @classmethod
    def from_values(cls, grid: Grid, values) -> SaturationField:
        values = np.asarray(values, dtype=float)
        return cls(grid, values, np.maximum(values, 0.0), np.minimum(values, 0.0))


def cell_weights(h: float, R: float, kind: WeightKind) -> np.ndarray:
    """c[k] = integral of w over the part of cell k (offset k*h) inside [0, R].

    Cell 0 contributes only its half [0, h/2].
    """
    kind = WeightKind(kind)
    if kind is WeightKind.CONSTANT_ONE:
        c0, n_full, c_last = constant_layout(h, R)
        c = np.concatenate(([c0], np.full(n_full, h), [c_last] if c_last > 0 else []))
        return c
    n = int(math.ceil(R / h + 0.5)) + 1
    k = np.arange(n, dtype=float)
    upper = kind.primitive((k + 0.5) * h, R)
    lower = kind.primitive(np.maximum((k - 0.5) * h, 0.0), R)
    c = upper - lower
    nz = np.flatnonzero(c > 0.0)
    return c[: nz[-1] + 1].copy()


def constant_layout(h: float, R: float) -> tuple[float, int, float]:
    """Constant-weight stencil as (half-cell weight, full cells, partial tail)."""
    if R <= 0.5 * h:
        return R, 0, 0.0
    q = R / h - 0.5
    n_full = math.floor(q)
    if math.isclose(q, n_full + 1, rel_tol=1e-12, abs_tol=0.0):
        n_full += 1
    tail = R - (n_full + 0.5) * h
    if tail <= 1e-12 * h:
        tail = 0.0
    return 0.5 * h, int(n_full), tail


class NonlocalOperator:
    """Cached stencils for one (grid, spec) pair, acting on raw value arrays."""

    def __init__(self, grid: Grid, spec: ModelSpec, method: str = "auto"):
        validate_spec(spec, grid)
        if method not in ("auto", "direct", "prefix"):
            raise ValueError(f"unknown method {method!r}")
        self.grid = grid
        self.spec = spec
        self.method = method

    @cached_property
    def w_stencil(self) -> np.ndarray:
        return cell_weights(self.grid.h, self.spec.R, self.spec.w)

    @cached_property
    def w_hat_stencil(self) -> np.ndarray:
        return cell_weights(self.grid.h, self.spec.R, self.spec.w_hat)

    @cached_property
    def mass_stencil(self) -> np.ndarray:
        return cell_weights(self.grid.h, self.spec.R, WeightKind.CONSTANT_ONE)

    def _sums(self, u, c, kind):
        use_prefix = self.method == "prefix" or (self.method == "auto" and kind is WeightKind.CONSTANT_ONE)
        if use_prefix:
            if kind is not WeightKind.CONSTANT_ONE:
                raise ValueError("prefix-sum path needs constant weights")
            c0, full, last = constant_layout(self.grid.h, self.spec.R)
            return kernels.one_sided_sums_prefix(u, c0, self.grid.h, full, last)
        return kernels.one_sided_sums(np.ascontiguousarray(u, dtype=float), c)

    def directional(self, u):
        """(G^+ u, G^- u) with the attraction weight w."""
        return self._sums(u, self.w_stencil, self.spec.w)

    def gradient(self, u):
        plus, minus = self.directional(u)
        return plus - minus

    def windowed_mass(self, u):
        plus, minus = self._sums(u, self.mass_stencil, WeightKind.CONSTANT_ONE)
        return plus + minus

    def weighted_mass(self, u):
        """Window integral of u weighted by w_hat."""
        plus, minus = self._sums(u, self.w_hat_stencil, self.spec.w_hat)
        return plus + minus

    def saturation(self, u):
        kind = self.spec.kind
        if kind is ModelKind.APS:
            return np.ones_like(np.asarray(u, dtype=float))
        if kind is ModelKind.LOCAL_SAT:
            u = np.asarray(u, dtype=float)
            if u.max() > self.spec.K:
                warnings.warn("local-sat density exceeds the crowding capacity; coefficient negative", RuntimeWarning, stacklevel=3)
            return 1.0 - u / self.spec.K
        return 1.0 - self.weighted_mass(u) / self.spec.K

    def drift(self, u):
        """Drift closure K(u) = S(u) * grad_NL u; also returns S."""
        grad = self.gradient(u)
        if self.spec.kind is ModelKind.APS:
            return grad, np.ones_like(grad)
        sat = self.saturation(u)
        return sat * grad, sat


def _op(u: DensityField, spec: ModelSpec, method: str = "auto") -> NonlocalOperator:
    return NonlocalOperator(u.grid, spec, method)


def directional_kernel(u: DensityField, side: str, spec: ModelSpec, method: str = "auto") -> np.ndarray:
    """G^+ (side='plus') or G^- (side='minus') at every cell centre."""
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    plus, minus = _op(u, spec, method).directional(u.values)
    return plus if side == "plus" else minus


def nonlocal_gradient(u: DensityField, spec: ModelSpec, method: str = "auto") -> DriftField:
    return DriftField(u.grid, _op(u, spec, method).gradient(u.values))


def windowed_mass(u: DensityField, spec: ModelSpec, method: str = "auto") -> np.ndarray:
    """Mass of u in [x-R, x+R] (unweighted) at each cell centre."""
    return _op(u, spec, method).windowed_mass(u.values)


def saturation_field(u: DensityField, spec: ModelSpec, method: str = "auto") -> SaturationField:
    return SaturationField.from_values(u.grid, _op(u, spec, method).saturation(u.values))


def drift_closure(u: DensityField, spec: ModelSpec, method: str = "auto") -> DriftField:
    drift, _ = _op(u, spec, method).drift(u.values)
    return DriftField(u.grid, drift)
