"""Time the compiled and the numpy form of each hot kernel.

    python benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Both forms are imported directly from ``adhesion1d.kernels`` so one process
times both regardless of ADHESION1D_DISABLE_NUMBA. The first compiled call
(JIT or cache load) is excluded. ``--end-to-end`` also times short PDE and
particle runs in subprocesses with the env flag on and off.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from adhesion1d import kernels
from adhesion1d._accel import HAVE_NUMBA
from adhesion1d.core import Grid, WeightKind
from adhesion1d.nonlocal_ops import cell_weights


def best_of(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    g = Grid(1.0, 1000)
    u = rng.random(g.M)
    c = cell_weights(g.h, 0.5, WeightKind.LINEAR_DECAY)
    yield "one_sided_sums M=1000 r=250", "one_sided_sums", (u, c)
    g = Grid(1.0, 4000)
    u = rng.random(g.M)
    c = cell_weights(g.h, 0.5, WeightKind.LINEAR_DECAY)
    yield "one_sided_sums M=4000 r=1000", "one_sided_sums", (u, c)
    M = 4000
    lower, upper = -np.ones(M), -np.ones(M)
    diag = np.full(M, 3.0)
    yield "solve_tridiagonal M=4000", "solve_tridiagonal", (lower, diag, upper, rng.random(M))
    for N in (300, 3500):
        xs = np.sort(rng.uniform(-1, 1, N))
        yield f"pair_sums N={N}", "pair_sums", (xs, xs, 1000.0, 0.5, WeightKind.LINEAR_DECAY.code, 0.5 / np.sqrt(N), WeightKind.CONSTANT_ONE.code, True)


E2E = """
import time
from adhesion1d.core import ModelSpec
from adhesion1d.pde import SolverConfig, run_pde
from adhesion1d.particles import SdeConfig, run_sde
spec = ModelSpec(kind="nonlocal-sat", K=0.6)
run_pde(SolverConfig(spec, n_steps=2, stride=2, seed=0))
run_sde(SdeConfig(spec, N=300, n_steps=2))
t0 = time.perf_counter(); run_pde(SolverConfig(spec, n_steps=1000, stride=1000, seed=0)); t1 = time.perf_counter()
run_sde(SdeConfig(spec, N=300, n_steps=500, stride=500)); t2 = time.perf_counter()
print(t1 - t0, t2 - t1)
"""


def end_to_end():
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, ADHESION1D_DISABLE_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        out[label] = [float(v) for v in r.stdout.split()]
    print()
    print(f"{'run':32s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speed-up':>9s}")
    for i, label in enumerate(("PDE 1000 steps M=1000", "particles 500 steps N=300")):
        a, b = out["numba"][i], out["numpy"][i]
        print(f"{label:32s} {a:12.3f} {b:12.3f} {b / a:8.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    print(f"{'kernel':32s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speed-up':>9s}")
    for label, name, fargs in cases():
        t_np = best_of(kernels.NUMPY[name], fargs, args.repeat)
        if HAVE_NUMBA:
            kernels.NUMBA[name](*fargs)
            t_nb = best_of(kernels.NUMBA[name], fargs, args.repeat)
            print(f"{label:32s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{label:32s} {'n/a':>12s} {1e3 * t_np:12.3f}")
    if args.end_to_end and HAVE_NUMBA:
        end_to_end()


if __name__ == "__main__":
    main()
