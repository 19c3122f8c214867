"""Compiled and numpy paths must agree; fast paths must match their references."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adhesion1d import kernels
from adhesion1d._accel import HAVE_NUMBA
from adhesion1d.nonlocal_ops import cell_weights, constant_layout

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@given(st.integers(2, 300), st.integers(1, 80), st.integers(0, 2**32 - 1))
def test_one_sided_sums_backends_agree(M, n, seed):
    rng = np.random.default_rng(seed)
    u = rng.random(M)
    c = rng.random(n)
    p1, m1 = kernels.NUMBA["one_sided_sums"](u, c)
    p2, m2 = kernels.NUMPY["one_sided_sums"](u, c)
    assert np.allclose(p1, p2, rtol=1e-12, atol=1e-13)
    assert np.allclose(m1, m2, rtol=1e-12, atol=1e-13)


def test_one_sided_sums_reference(rng):
    u = rng.random(37)
    c = rng.random(9)
    plus, minus = kernels.one_sided_sums(u, c)
    for j in range(37):
        ref_p = sum(c[k] * u[j + k] for k in range(9) if j + k < 37)
        ref_m = sum(c[k] * u[j - k] for k in range(9) if j - k >= 0)
        assert plus[j] == pytest.approx(ref_p, rel=1e-13)
        assert minus[j] == pytest.approx(ref_m, rel=1e-13)


@given(st.integers(20, 400), st.floats(0.05, 1.0), st.integers(0, 2**32 - 1))
def test_prefix_matches_direct(M, R, seed):
    h = 2.0 / M
    if R < h:
        R = h
    u = np.random.default_rng(seed).random(M)
    c = cell_weights(h, R, "constant-one")
    c0, n_full, tail = constant_layout(h, R)
    direct = kernels.one_sided_sums(u, c)
    prefix = kernels.one_sided_sums_prefix(u, c0, h, n_full, tail)
    assert np.max(np.abs(direct[0] - prefix[0])) <= 1e-12
    assert np.max(np.abs(direct[1] - prefix[1])) <= 1e-12


@given(st.integers(2, 200), st.integers(0, 2**32 - 1))
def test_tridiagonal_backends_agree(M, seed):
    rng = np.random.default_rng(seed)
    lower = -rng.random(M)
    upper = -rng.random(M)
    diag = 1.0 + np.abs(lower) + np.abs(upper) + rng.random(M)
    rhs = rng.random(M)
    x1 = kernels.NUMBA["solve_tridiagonal"](lower, diag, upper, rhs)
    x2 = kernels.NUMPY["solve_tridiagonal"](lower, diag, upper, rhs)
    A = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    assert np.allclose(A @ x1, rhs, atol=1e-12)
    assert np.allclose(x1, x2, rtol=1e-10, atol=1e-12)


@given(st.integers(2, 400), st.sampled_from([0, 1]), st.sampled_from([0, 1]), st.floats(0.05, 1.0), st.integers(0, 2**32 - 1))
def test_bucketed_pair_sums_bit_identical_to_bruteforce(N, wcode, whcode, a, seed):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(-1, 1, N))
    # some exact duplicates and wall-clamped points
    xs[: N // 10] = -1.0
    xs = np.sort(xs)
    f1, s1 = kernels._pair_sums_nb(xs, xs, 3.0, 0.5, wcode, a, whcode, True)
    f2, s2 = kernels._pair_sums_bruteforce_nb(xs, xs, 3.0, 0.5, wcode, a, whcode, True)
    assert np.array_equal(f1, f2)
    assert np.array_equal(s1, s2)


def test_pair_sums_backends_agree(rng):
    xs = np.sort(rng.uniform(-1, 1, 700))
    q = np.linspace(-1, 1, 201)
    f1, s1 = kernels.NUMBA["pair_sums"](q, xs, 2.0, 0.5, 1, 0.5, 0, True)
    f2, s2 = kernels.NUMPY["pair_sums"](q, xs, 2.0, 0.5, 1, 0.5, 0, True)
    assert np.allclose(f1, f2, rtol=1e-12, atol=1e-10)
    assert np.array_equal(s1, s2)


def test_numpy_fallback_selected_by_env(tmp_path):
    import subprocess
    import sys

    code = "from adhesion1d import _accel, kernels; print(_accel.backend_name(), kernels.pair_sums is kernels.NUMPY['pair_sums'])"
    env = {"ADHESION1D_DISABLE_NUMBA": "1", "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out == ["numpy", "True"]
