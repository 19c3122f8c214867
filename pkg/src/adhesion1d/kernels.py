"""Hot loops, each in a compiled form and a vectorised numpy form.

Public names dispatch on ``_accel.USE_NUMBA``. Both implementations are
importable as ``NUMBA`` / ``NUMPY`` for the benchmark and for the
cross-checking tests. Within one backend every reduction runs in a fixed
order, so results never depend on thread count.
"""

import numpy as np
from scipy.linalg import solve_banded

from ._accel import USE_NUMBA, njit, prange

# ---------------------------------------------------------------------------
# one-sided stencil sums:  plus[j] = sum_k c[k] u[j+k],  minus[j] = sum_k c[k] u[j-k]
# ---------------------------------------------------------------------------


@njit
def _one_sided_sums_nb(u, c):
    M = u.shape[0]
    n = c.shape[0]
    cr = c[::-1].copy()
    plus = np.empty(M)
    minus = np.empty(M)
    # contiguous dot products; explicit loops were slower still
    for j in range(M):
        m = min(n, M - j)
        plus[j] = np.dot(c[:m], u[j : j + m])
        m = min(n, j + 1)
        minus[j] = np.dot(cr[n - m :], u[j - m + 1 : j + 1])
    return plus, minus


def _one_sided_sums_np(u, c):
    M = u.shape[0]
    n = c.shape[0]
    plus = np.convolve(u, c[::-1])[n - 1 : n - 1 + M]
    minus = np.convolve(u, c)[:M]
    return plus, minus


def one_sided_sums_prefix(u, c0, h, n_full, c_last):
    """Same sums for a kernel shaped ``[c0, h, ..., h, c_last]`` in O(M).

    ``n_full`` counts the full-width entries after ``c0``.
    """
    u = np.asarray(u, dtype=float)
    M = u.shape[0]
    P = np.concatenate(([0.0], np.cumsum(u)))
    j = np.arange(M)
    hi = np.minimum(j + n_full + 1, M)
    plus = c0 * u + h * (P[hi] - P[np.minimum(j + 1, M)])
    lo = np.maximum(j - n_full, 0)
    minus = c0 * u + h * (P[j] - P[lo])
    if c_last != 0.0:
        idx = j + n_full + 1
        ok = idx < M
        plus[ok] += c_last * u[idx[ok]]
        idx = j - n_full - 1
        ok = idx >= 0
        minus[ok] += c_last * u[idx[ok]]
    return plus, minus


# ---------------------------------------------------------------------------
# tridiagonal solve (lower[0] and upper[-1] unused)
# ---------------------------------------------------------------------------


@njit
def _solve_tridiagonal_nb(lower, diag, upper, rhs):
    M = diag.shape[0]
    cp = np.empty(M)
    dp = np.empty(M)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, M):
        m = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / m
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m
    x = np.empty(M)
    x[M - 1] = dp[M - 1]
    for i in range(M - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _solve_tridiagonal_np(lower, diag, upper, rhs):
    M = diag.shape[0]
    ab = np.zeros((3, M))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


# ---------------------------------------------------------------------------
# particle interaction sums against a sorted particle set
# ---------------------------------------------------------------------------


@njit(inline="always")
def _weight(code, r, R):
    if r >= R:
        return 0.0
    if code == 0:
        return 1.0
    return (R - r) / R


@njit(parallel=True)
def _pair_sums_nb(q, xs, gamma, R, wcode, a, whcode, need_sat):
    """force[i] = sum_j gamma w(|xs_j - q_i|) sign(xs_j - q_i);
    sat[i] = sum_{|xs_j - q_i| < a} w_hat(|xs_j - q_i|).

    ``xs`` must be sorted; j runs in increasing order over the window that
    can contribute, which matches the full loop bit for bit since the
    skipped terms are exact zeros.
    """
    nq = q.shape[0]
    force = np.zeros(nq)
    sat = np.zeros(nq)
    reach = R
    if need_sat and a > reach:
        reach = a
    for i in prange(nq):
        x = q[i]
        lo = np.searchsorted(xs, x - reach, side="left")
        hi = np.searchsorted(xs, x + reach, side="right")
        f = 0.0
        s = 0.0
        for j in range(lo, hi):
            d = xs[j] - x
            r = abs(d)
            if d > 0.0:
                f += gamma * _weight(wcode, r, R)
            elif d < 0.0:
                f -= gamma * _weight(wcode, r, R)
            if need_sat and r < a:
                s += _weight(whcode, r, R)
        force[i] = f
        sat[i] = s
    return force, sat


@njit(parallel=True)
def _pair_sums_bruteforce_nb(q, xs, gamma, R, wcode, a, whcode, need_sat):
    nq = q.shape[0]
    n = xs.shape[0]
    force = np.zeros(nq)
    sat = np.zeros(nq)
    for i in prange(nq):
        x = q[i]
        f = 0.0
        s = 0.0
        for j in range(n):
            d = xs[j] - x
            r = abs(d)
            if d > 0.0:
                f += gamma * _weight(wcode, r, R)
            elif d < 0.0:
                f -= gamma * _weight(wcode, r, R)
            if need_sat and r < a:
                s += _weight(whcode, r, R)
        force[i] = f
        sat[i] = s
    return force, sat


def _np_weight(code, r, R):
    if code == 0:
        return np.where(r < R, 1.0, 0.0)
    return np.where(r < R, (R - r) / R, 0.0)


def _pair_sums_np(q, xs, gamma, R, wcode, a, whcode, need_sat, block=512):
    q = np.asarray(q, dtype=float)
    nq = q.shape[0]
    force = np.zeros(nq)
    sat = np.zeros(nq)
    for start in range(0, nq, block):
        d = xs[None, :] - q[start : start + block, None]
        r = np.abs(d)
        force[start : start + block] = (gamma * _np_weight(wcode, r, R) * np.sign(d)).sum(axis=1)
        if need_sat:
            sat[start : start + block] = np.where(r < a, _np_weight(whcode, r, R), 0.0).sum(axis=1)
    return force, sat


NUMBA = {
    "one_sided_sums": _one_sided_sums_nb,
    "solve_tridiagonal": _solve_tridiagonal_nb,
    "pair_sums": _pair_sums_nb,
}
NUMPY = {
    "one_sided_sums": _one_sided_sums_np,
    "solve_tridiagonal": _solve_tridiagonal_np,
    "pair_sums": _pair_sums_np,
}
_ACTIVE = NUMBA if USE_NUMBA else NUMPY

# np.convolve beats the compiled stencil loop (see benchmarks/), so both
# backends use it; the compiled form stays for cross-checks
one_sided_sums = _one_sided_sums_np
solve_tridiagonal = _ACTIVE["solve_tridiagonal"]
pair_sums = _ACTIVE["pair_sums"]
pair_sums_bruteforce = _pair_sums_bruteforce_nb if USE_NUMBA else _pair_sums_np
