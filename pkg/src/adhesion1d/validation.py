"""Acceptance checks and the validation suites built from them.

Each ``check_*`` function runs one criterion at its stated tolerance and
returns a CheckResult with the measured values. Nothing here raises on a
failed check; failures are report entries.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.signal import find_peaks

from .analysis import compare_fields, convergence_order, empirical_fields, histogram, matched_spec, matched_time, sample_density
from .core import DensityField, Grid, ModelSpec, eval_weight
from .master_eq import ProportionVector, interaction_balance, limit_operator, pde_time_factor, run_master
from .nonlocal_ops import NonlocalOperator
from .pde import InitialCondition, PdeSolver, SolverConfig, heat_mode_amplitude, make_initial, neumann_wavenumber
from .particles import SdeConfig, run_sde
from .presets import get_preset


@dataclass
class CheckResult:
    id: str
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    threshold: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.id} {self.name}: {vals} (need {self.threshold})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


PAPER_GRID = Grid.from_width(1.0, 2e-3)
MODELS = {
    "aps": ModelSpec(kind="aps"),
    "local-sat": ModelSpec(kind="local-sat", K=1.0),
    "nonlocal-sat": ModelSpec(kind="nonlocal-sat", K=0.6),
}


# ---------------------------------------------------------------------------
# 1, 2: conservation and positivity over 10^5 steps
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _long_run(kind: str, n_steps: int = 100_000):
    cfg = SolverConfig(MODELS[kind], grid=PAPER_GRID, dt=1e-4, n_steps=n_steps, stride=n_steps, seed=0)
    t0 = time.perf_counter()
    res = PdeSolver(cfg).run()
    elapsed = time.perf_counter() - t0
    return float(np.max(np.abs(res.mass - 1.0))), float(res.min_value.min()), elapsed


@_timed
def check_mass(n_steps: int = 100_000) -> CheckResult:
    measured, ok = {}, True
    for kind in MODELS:
        err, _, secs = _long_run(kind, n_steps)
        measured[f"{kind}_max_mass_err"] = err
        measured[f"{kind}_seconds"] = secs
        ok &= err <= 1e-10 and secs <= 120
    return CheckResult("1", "mass conservation", ok, measured, "|mass-1| <= 1e-10 each step, <= 120 s per model")


@_timed
def check_nonnegativity(n_steps: int = 100_000) -> CheckResult:
    measured, ok = {}, True
    for kind in MODELS:
        _, lo, _ = _long_run(kind, n_steps)
        measured[f"{kind}_min_u"] = lo
        ok &= lo >= -1e-12
    return CheckResult("2", "nonnegativity", ok, measured, "min u >= -1e-12")


# ---------------------------------------------------------------------------
# 3: constant density is an interior equilibrium
# ---------------------------------------------------------------------------


@_timed
def check_interior_equilibrium() -> CheckResult:
    g = PAPER_GRID
    u = np.full(g.M, 1.0 / (2 * g.L))
    measured, ok = {}, True
    for kind, spec in MODELS.items():
        K, _ = NonlocalOperator(g, spec).drift(u)
        inner = np.abs(g.centers) < g.L - spec.R
        worst = float(np.max(np.abs(K[inner])))
        measured[f"{kind}_max_drift"] = worst
        ok &= worst <= 1e-12
    return CheckResult("3", "interior equilibrium", ok, measured, "|K(u)| <= 1e-12 on (-L+R, L-R)")


# ---------------------------------------------------------------------------
# 4: quadrature order of the nonlocal gradient
# ---------------------------------------------------------------------------


def _bump(x):
    return 0.5 * (1.0 + np.cos(np.pi * x))


def exact_gradient(x: float, spec: ModelSpec, L: float = 1.0) -> float:
    """Adaptive-quadrature value of int_0^R w(r) [u(x+r) 1_{x+r<L} - u(x-r) 1_{x-r>-L}] dr."""
    R = spec.R
    right = integrate.quad(lambda r: eval_weight(spec.w, r, R) * _bump(x + r), 0.0, min(R, L - x), epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    left = integrate.quad(lambda r: eval_weight(spec.w, r, R) * _bump(x - r), 0.0, min(R, x + L), epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return right - left


@_timed
def check_quadrature_order(widths=(4e-3, 2e-3, 1e-3)) -> CheckResult:
    measured, ok = {}, True
    for w in ("linear-decay", "constant-one"):
        spec = ModelSpec(kind="aps", w=w)
        errs = []
        for h in widths:
            g = Grid.from_width(1.0, h)
            x = g.centers
            num = NonlocalOperator(g, spec).gradient(_bump(x))
            ref = np.array([exact_gradient(xi, spec) for xi in x])
            errs.append(float(np.max(np.abs(num - ref))))
        order = convergence_order(widths, errs)
        measured[f"{w}_errors"] = errs
        measured[f"{w}_order"] = order
        ok &= order >= 1.9
    return CheckResult("4", "quadrature convergence", ok, measured, "observed order >= 1.9")


# ---------------------------------------------------------------------------
# 5: PDE against the master-equation stepper
# ---------------------------------------------------------------------------


@_timed
def check_master_oracle(T: float = 0.01) -> CheckResult:
    g = PAPER_GRID
    u0 = make_initial("cosine-bump", g)
    measured, ok = {}, True
    for kind, spec in MODELS.items():
        spec = spec.with_(gamma=10.0)
        t0 = time.perf_counter()
        s = run_master(u0, spec, T / pde_time_factor())
        t_master = time.perf_counter() - t0
        dt = 1e-4
        cfg = SolverConfig(spec, grid=g, dt=dt, n_steps=int(round(T / dt)), stride=10**9)
        res = PdeSolver(cfg).run(u0)
        diff = float(np.max(np.abs(res.final.density.values - s.s / g.h)))
        measured[f"{kind}_max_diff"] = diff
        measured[f"{kind}_master_seconds"] = t_master
        ok &= diff <= 5 * g.h and t_master <= 30
    return CheckResult("5", "oracle equivalence", ok, measured, f"max|u_pde - u_master| <= {5 * g.h:g}, <= 30 s")


# ---------------------------------------------------------------------------
# 6: heat-equation limit
# ---------------------------------------------------------------------------


def _heat_run(initial: InitialCondition, t: float):
    g = PAPER_GRID
    dt = 1e-4
    cfg = SolverConfig(ModelSpec(gamma=0.0), grid=g, dt=dt, n_steps=int(round(t / dt)), stride=10**9, initial=initial)
    res = PdeSolver(cfg).run()
    return res.snapshots[0].density, res.final.density


@_timed
def check_heat_limit(t: float = 0.1) -> CheckResult:
    """Stated target: first-mode decay exp(-(pi/2)^2 t) from the cosine bump."""
    L = PAPER_GRID.L
    k1 = neumann_wavenumber(L, 1)
    expected = math.exp(-k1 * k1 * t)
    u0, u1 = _heat_run(InitialCondition("cosine-bump"), t)
    # the bump's only non-constant component
    a0 = heat_mode_amplitude(u0, math.pi / L)
    a1 = heat_mode_amplitude(u1, math.pi / L)
    ratio = a1 / a0
    first0 = heat_mode_amplitude(u0, k1, L)
    rel = abs(ratio / expected - 1.0)
    measured = {
        "bump_first_mode_amplitude": first0,
        "bump_decay_ratio": ratio,
        "expected": expected,
        "rel_error": rel,
        "exp(-pi^2 t)": math.exp(-math.pi**2 * t / L**2),
    }
    return CheckResult("6", "heat-equation limit (cosine bump)", rel <= 0.02, measured, "decay within 2% of exp(-(pi/2)^2 t)")


@_timed
def check_heat_first_mode(t: float = 0.1) -> CheckResult:
    """Same rate, measured on data that actually excite the first Neumann mode."""
    L = PAPER_GRID.L
    k1 = neumann_wavenumber(L, 1)
    expected = math.exp(-k1 * k1 * t)
    u0, u1 = _heat_run(InitialCondition("cosine-mode"), t)
    ratio = heat_mode_amplitude(u1, k1, L) / heat_mode_amplitude(u0, k1, L)
    rel = abs(ratio / expected - 1.0)
    measured = {"decay_ratio": ratio, "expected": expected, "rel_error": rel}
    return CheckResult("6b", "heat-equation limit (first Neumann mode)", rel <= 0.02, measured, "decay within 2% of exp(-(pi/2)^2 t)")


@_timed
def check_heat_bump_mode(t: float = 0.1) -> CheckResult:
    """The cosine bump's own mode at its own rate exp(-pi^2 t)."""
    L = PAPER_GRID.L
    expected = math.exp(-((math.pi / L) ** 2) * t)
    u0, u1 = _heat_run(InitialCondition("cosine-bump"), t)
    ratio = heat_mode_amplitude(u1, math.pi / L) / heat_mode_amplitude(u0, math.pi / L)
    rel = abs(ratio / expected - 1.0)
    return CheckResult("6c", "heat-equation limit (bump mode)", rel <= 0.02, {"decay_ratio": ratio, "expected": expected, "rel_error": rel}, "decay within 2% of exp(-pi^2 t)")


# ---------------------------------------------------------------------------
# 7, 8: qualitative regimes on the presets' PDE side
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def preset_final_density(name: str) -> DensityField:
    cfg = get_preset(name)
    return PdeSolver(cfg.solver_config()).run().final.density


def interior_peaks(u: DensityField, rel_prominence: float = 0.05) -> np.ndarray:
    v = u.values
    idx, _ = find_peaks(v, prominence=rel_prominence * v.max())
    return u.grid.centers[idx]


@_timed
def check_aps_aggregation(preset: str = "aps-cw", reference: str = "fig-aps") -> CheckResult:
    peaks = interior_peaks(preset_final_density(preset))
    spacing = float(np.min(np.diff(peaks))) if peaks.size >= 2 else float("nan")
    ok = peaks.size >= 2 and 0.8 <= spacing <= 1.2
    ref_peaks = interior_peaks(preset_final_density(reference))
    ref_spacing = float(np.min(np.diff(ref_peaks))) if ref_peaks.size >= 2 else float("nan")
    measured = {
        "preset": preset,
        "peaks": [round(float(p), 4) for p in peaks],
        "nearest_spacing": spacing,
        f"{reference}_peaks": [round(float(p), 4) for p in ref_peaks],
        f"{reference}_spacing": ref_spacing,
    }
    return CheckResult("7", "aps aggregation regime", ok, measured, ">= 2 peaks, nearest spacing in [0.8, 1.2]")


@_timed
def check_strong_repulsion(preset: str = "fig-nlsat-k02") -> CheckResult:
    u = preset_final_density(preset)
    g = u.grid
    frac = float(np.mean(u.values <= 3 * 0.5))
    fifths = [float(u.proportions[(g.centers >= -g.L + 0.4 * k * g.L) & (g.centers < -g.L + 0.4 * (k + 1) * g.L)].sum()) for k in range(5)]
    ok = frac >= 0.9 and min(fifths) > 0.01
    return CheckResult("8a", "strong repulsion spreads", ok, {"frac_cells_le_1.5": frac, "mass_per_fifth": fifths}, ">= 90% cells <= 1.5, mass > 1% in every fifth")


@_timed
def check_concentrated_weak_repulsion(preset: str = "fig-nlsat-k06-concentrated") -> CheckResult:
    u = preset_final_density(preset)
    x = u.grid.centers
    inner = float(u.proportions[np.abs(x) <= 0.25].sum())
    support = x[u.values > 1e-3 * u.values.max()]
    measured = {"mass_in_[-0.25,0.25]": inner, "support": [float(support.min()), float(support.max())]}
    return CheckResult("8b", "weak repulsion keeps concentrated data", inner >= 0.95, measured, ">= 95% of mass in [-0.25, 0.25]")


# ---------------------------------------------------------------------------
# 9: particle histograms approach the PDE as N grows
# ---------------------------------------------------------------------------


def sde_pde_distances(kind: str, K: float, Ns=(100, 300, 1000), seeds=range(10), gamma=40.0, t_sde=0.5, dt_sde=1e-3, bin_width=0.01):
    """L1 distance between particle histograms and the matched PDE density.

    Particles use sqrt(2 eps2 dt) Brownian increments so the Fokker-Planck
    limit is u_t = eps2 u_xx - gamma (u K)_x; the PDE is run with gamma/eps2
    to time eps2 * t_sde.
    """
    spec = ModelSpec(kind=kind, K=K, gamma=gamma)
    base = SdeConfig(spec, N=Ns[0], dt=dt_sde, n_steps=int(round(t_sde / dt_sde)), stride=10**9, noise="brownian", eps2=0.4)
    pdt = 1e-4
    n = int(round(matched_time(base, t_sde) / pdt))
    pcfg = SolverConfig(matched_spec(base), grid=PAPER_GRID, dt=pdt, n_steps=n, stride=10**9, initial=InitialCondition("uniform"))
    u_pde = PdeSolver(pcfg).run().final.density
    out = {}
    for N in Ns:
        d = []
        for seed in seeds:
            run = run_sde(replace(base, N=N, seed=seed))
            d.append(compare_fields(histogram(run.final.positions, bin_width), u_pde)["L1"])
        out[N] = d
    return out


@_timed
def check_sde_pde(Ns=(100, 300, 1000), n_seeds: int = 10) -> CheckResult:
    measured, ok = {}, True
    for kind, K in (("aps", 1.0), ("nonlocal-sat", 0.6)):
        dist = sde_pde_distances(kind, K, Ns, range(n_seeds))
        med = [float(np.median(dist[N])) for N in Ns]
        measured[f"{kind}_median_L1"] = med
        ok &= all(b < a for a, b in zip(med, med[1:]))
    return CheckResult("9", "SDE-PDE consistency", ok, measured, "median L1 strictly decreasing in N")


# ---------------------------------------------------------------------------
# 10: empirical fields from i.i.d. samples
# ---------------------------------------------------------------------------


def smooth_density(grid: Grid) -> DensityField:
    x = grid.centers
    return DensityField.from_raw(grid, 1.0 + 0.6 * np.cos(np.pi * x) + 0.3 * np.sin(2 * np.pi * x))


@_timed
def check_empirical_fields(N: int = 100_000, seed: int = 0, bin_width: float = 0.01) -> CheckResult:
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    g = Grid.from_width(1.0, bin_width)
    u = smooth_density(g)
    K, S = NonlocalOperator(g, spec).drift(u.values)
    pos = sample_density(u, N, np.random.default_rng(seed))
    emp = empirical_fields(pos, spec, bin_width)
    drift_rel = float(np.max(np.abs(emp.drift - K)) / np.ptp(K))
    sat_rel = float(np.max(np.abs(emp.saturation - S)) / np.ptp(S))
    ok = drift_rel <= 0.05 and sat_rel <= 0.05
    return CheckResult("10", "empirical-field consistency", ok, {"drift_Linf/range": drift_rel, "saturation_Linf/range": sat_rel}, "<= 0.05 of field range")


# ---------------------------------------------------------------------------
# 11: byte-identical reruns across thread counts
# ---------------------------------------------------------------------------


def _run_preset_subprocess(name: str, outdir: Path, threads: int):
    env = dict(os.environ)
    env["NUMBA_NUM_THREADS"] = str(threads)
    subprocess.run([sys.executable, "-m", "adhesion1d.cli", "preset", name, "--output", str(outdir), "--quiet"], env=env, check=True)


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@_timed
def check_determinism(preset: str = "fig-aps", threads=(1, 2, 1)) -> CheckResult:
    with tempfile.TemporaryDirectory() as tmp:
        trees = []
        for k, n in enumerate(threads):
            out = Path(tmp) / f"run{k}"
            _run_preset_subprocess(preset, out, n)
            trees.append(_tree_bytes(out))
    same = all(t == trees[0] for t in trees[1:])
    measured = {"preset": preset, "threads": list(threads), "files": len(trees[0])}
    if not same:
        measured["differing"] = sorted({k for t in trees[1:] for k in t if t.get(k) != trees[0].get(k)})
    return CheckResult("11", "determinism", same and len(trees[0]) > 0, measured, "byte-identical bundles")


# ---------------------------------------------------------------------------
# supplementary convergence: master-equation balance vs limit operator
# ---------------------------------------------------------------------------


@_timed
def check_master_consistency(cells=(500, 1000, 2000, 4000)) -> CheckResult:
    """interaction_balance + h^2 T^h -> 0 in the interior; T^h is the limit transport term.

    nonlocal-sat is taken at K = 1 where the coefficient keeps one sign.
    Meshes are chosen so that R is a whole number of cells.
    """
    measured, ok = {}, True
    specs = {"aps": ModelSpec(kind="aps", gamma=10.0), "local-sat": ModelSpec(kind="local-sat", gamma=10.0), "nonlocal-sat": ModelSpec(kind="nonlocal-sat", gamma=10.0, K=1.0)}
    for kind, spec in specs.items():
        errs, hs = [], []
        for M in cells:
            g = Grid(1.0, M)
            u = 1 + 0.5 * np.cos(np.pi * g.centers)
            u /= u.sum() * g.h
            b = interaction_balance(ProportionVector(g, u * g.h), spec)
            T = limit_operator(u, g, spec)
            mask = np.abs(g.centers) < 0.3
            # balance is per unit h^2 of the continuum transport term
            errs.append(float(np.max(np.abs(b + g.h**2 * T)[mask])) / g.h**2)
            hs.append(g.h)
        order = convergence_order(hs, errs)
        measured[f"{kind}_order"] = order
        ok &= order >= 0.9
    return CheckResult("c1", "master-eq vs limit drift residual", ok, measured, "order >= 0.9")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

SUITES = {
    "invariants": (check_mass, check_nonnegativity, check_interior_equilibrium),
    "convergence": (check_quadrature_order, check_master_consistency, check_empirical_fields),
    "oracle": (check_master_oracle, check_heat_limit, check_heat_first_mode, check_heat_bump_mode, check_sde_pde),
    "figures": (check_aps_aggregation, check_strong_repulsion, check_concentrated_weak_repulsion, check_determinism),
}


def run_suite(name: str, echo=None) -> dict:
    """Run every check of a suite; returns {"suite", "passed", "checks": [...]}."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    results = []
    for fn in SUITES[name]:
        try:
            res = fn()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(fn.__name__, fn.__name__, False, {"error": f"{type(exc).__name__}: {exc}"})
        if echo:
            echo(res.line())
        results.append(res)
    return {"suite": name, "passed": all(r.passed for r in results), "checks": [asdict(r) for r in results]}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, default=float)
