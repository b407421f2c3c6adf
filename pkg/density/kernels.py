"""Numba kernels for the bridge functionals and the implicit root a(v, z).

On a bridge with nodes u_k = k/m and exponent base_k = sigma*W~_k - sigma^2*u_k/2

    F(v, a)   = sum_k w_k exp(base_k + sigma*u_k*a)
    K(v, a)   = sigma   * sum_k w_k u_k   exp(...)      (= dF/da)
    K'_a(v,a) = sigma^2 * sum_k w_k u_k^2 exp(...)

with w_k = min(1/m, v - u_k) for u_k < v. Only the first ``kmax`` nodes carry weight.
"""
import math

import numpy as np
from numba import njit, prange

EXP_LIMIT = 700.0
MAX_EXPAND = 200

OK = 0
BELOW_FLOOR = 1
DISCARDED = 2

_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def functionals(base, w, u, sigma, a, kmax):
    """Return (F, K, K'_a, overflow) at a."""
    f = 0.0
    k1 = 0.0
    k2 = 0.0
    for k in range(kmax):
        e = base[k] + sigma * u[k] * a
        if e > EXP_LIMIT:
            return f, sigma * k1, sigma * sigma * k2, True
        x = w[k] * math.exp(e)
        f += x
        k1 += u[k] * x
        k2 += u[k] * u[k] * x
    return f, sigma * k1, sigma * sigma * k2, False


@njit(cache=True)
def solve_root(base, w, u, sigma, v, z, tol, max_iter, kmax):
    """Safeguarded Newton on an expanding bracket.

    Returns (status, a, F, K, K'_a, lo, hi). Overflow at a trial point is treated as
    F = +inf; the sample is discarded only when the root itself overflows or the
    iteration cap is hit.
    """
    nan = np.nan
    floor = w[0] * math.exp(base[0])
    if z <= floor:
        return BELOW_FLOOR, nan, nan, nan, nan, nan, nan

    a0 = math.log(z / v) / (sigma * v) + 0.5 * sigma
    f, kv, ka, ovf = functionals(base, w, u, sigma, a0, kmax)
    if not ovf and abs(f - z) <= tol:
        return OK, a0, f, kv, ka, a0, a0

    step = 1.0
    if ovf or f > z:
        hi = a0
        lo = a0 - step
        found = False
        for _ in range(MAX_EXPAND):
            f_lo, _k, _ka, ovf_lo = functionals(base, w, u, sigma, lo, kmax)
            if not ovf_lo and f_lo < z:
                found = True
                break
            hi = lo
            step *= 2.0
            lo = hi - step
        if not found:
            return DISCARDED, nan, nan, nan, nan, nan, nan
    else:
        lo = a0
        hi = a0 + step
        found = False
        for _ in range(MAX_EXPAND):
            f_hi, _k, _ka, ovf_hi = functionals(base, w, u, sigma, hi, kmax)
            if ovf_hi or f_hi > z:
                found = True
                break
            lo = hi
            step *= 2.0
            hi = lo + step
        if not found:
            return DISCARDED, nan, nan, nan, nan, nan, nan

    # Residuals below a few ulps of z cannot be resolved in double precision.
    eff_tol = max(tol, 1e-14 * z)
    a = a0 if lo < a0 < hi else 0.5 * (lo + hi)
    for _ in range(max_iter):
        f, kv, ka, ovf = functionals(base, w, u, sigma, a, kmax)
        if ovf:
            hi = a
            a = 0.5 * (lo + hi)
            continue
        r = f - z
        if abs(r) <= eff_tol:
            return OK, a, f, kv, ka, lo, hi
        if r < 0.0:
            lo = a
        else:
            hi = a
        a_new = a - r / kv if kv > 0.0 else 0.5 * (lo + hi)
        if not (lo < a_new < hi):
            a_new = 0.5 * (lo + hi)
        if a_new == a:
            break
        a = a_new
    return DISCARDED, nan, nan, nan, nan, nan, nan


@njit(parallel=True, cache=True)
def solve_batch(base, w, u, sigma, v, kmax, kstar, z_grid, tol, max_iter,
                a_out, k_out, ka_out, p_out, status):
    """Roots for every (bridge, z); per-bridge writes only, so output is thread-count free."""
    n_bridges = base.shape[0]
    n_z = z_grid.shape[0]
    for i in prange(n_bridges):
        row = base[i]
        for j in range(n_z):
            st, a, f, kv, ka, lo, hi = solve_root(row, w, u, sigma, v, z_grid[j], tol, max_iter, kmax)
            status[i, j] = st
            if st == OK:
                e = row[kstar] + sigma * u[kstar] * a
                if e > EXP_LIMIT:
                    status[i, j] = DISCARDED
                    continue
                a_out[i, j] = a
                k_out[i, j] = kv
                ka_out[i, j] = ka
                p_out[i, j] = math.exp(e)


@njit(parallel=True, cache=True)
def partial_moment_batch(base, w, u, sigma, v, kmax, b, tol, max_iter, out, status):
    """Per bridge: int_{a(b)}^inf F(v, a) phi(a) da in closed form."""
    n_bridges = base.shape[0]
    for i in prange(n_bridges):
        row = base[i]
        a_b = -np.inf
        st = BELOW_FLOOR
        if b > 0.0:
            st, a, f, kv, ka, lo, hi = solve_root(row, w, u, sigma, v, b, tol, max_iter, kmax)
            if st == OK:
                a_b = a
        status[i] = st if st == DISCARDED else OK
        if st == DISCARDED:
            out[i] = np.nan
            continue
        s = 0.0
        for k in range(kmax):
            c = sigma * u[k]
            e = row[k] + 0.5 * c * c
            if e > EXP_LIMIT:
                status[i] = DISCARDED
                s = np.nan
                break
            s += w[k] * math.exp(e) * 0.5 * math.erfc(-(c - a_b) / _SQRT2)
        out[i] = s
