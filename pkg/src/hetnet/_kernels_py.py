"""Pure numpy implementations of the sampling kernels.

Used when the compiled ``_ckernels`` extension is unavailable; results agree
with the compiled path to floating point rounding.
"""

from __future__ import annotations

import numpy as np

__all__ = ["BACKEND", "eval_power_sum", "invert_power_sum", "box_muller", "ks_uniform_stat"]

BACKEND = "python"

_MAX_ITER = 200
_VTOL = 1e-14


def eval_power_sum(coefs, exps, x):
    """Evaluate ``sum_j coefs[j] * x**exps[j]`` elementwise."""
    coefs = np.asarray(coefs, dtype=float)
    exps = np.asarray(exps, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for c, e in zip(coefs, exps):
        out += c * x**e
    return out


def invert_power_sum(coefs, exps, targets):
    """Solve ``sum_j c_j x**e_j = target`` for ``x >= 0``, elementwise.

    All coefficients and exponents must be positive. Newton iteration on
    ``log x`` safeguarded by a bracket; relative accuracy ~1e-14.
    """
    coefs = np.asarray(coefs, dtype=float)
    exps = np.asarray(exps, dtype=float)
    targets = np.asarray(targets, dtype=float)
    out = np.zeros_like(targets)
    pos = targets > 0
    if not pos.any():
        return out
    tgt = targets[pos]
    if len(coefs) == 1:
        out[pos] = (tgt / coefs[0]) ** (1.0 / exps[0])
        return out
    log_t = np.log(tgt)
    log_c = np.log(coefs)
    k = len(coefs)
    # root lies between the single-term solutions for target/k and target
    single = (log_t[:, None] - log_c[None, :]) / exps[None, :]
    hi = single.min(axis=1)
    lo = ((log_t[:, None] - np.log(k) - log_c[None, :]) / exps[None, :]).min(axis=1)
    v = hi.copy()
    active = np.ones(len(tgt), dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        va = v[active]
        a = log_c[None, :] + exps[None, :] * va[:, None]
        amax = a.max(axis=1)
        w = np.exp(a - amax[:, None])
        s = w.sum(axis=1)
        f = amax + np.log(s) - log_t[active]
        fp = (w * exps[None, :]).sum(axis=1) / s
        lo_a = np.where(f < 0, va, lo[active])
        hi_a = np.where(f > 0, va, hi[active])
        step = f / fp
        v_new = va - step
        outside = (v_new <= lo_a) | (v_new >= hi_a)
        v_new = np.where(outside, 0.5 * (lo_a + hi_a), v_new)
        v_new = np.where(f == 0, va, v_new)
        done = (np.abs(v_new - va) <= _VTOL * np.maximum(1.0, np.abs(va))) | (f == 0)
        lo[active] = lo_a
        hi[active] = hi_a
        v[active] = v_new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    out[pos] = np.exp(v)
    return out


def box_muller(u1, u2):
    """Standard normals from pairs of uniforms on [0, 1)."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def ks_uniform_stat(u_sorted):
    """Kolmogorov-Smirnov distance of sorted values from Uniform(0, 1)."""
    u = np.asarray(u_sorted, dtype=float)
    n = len(u)
    if n == 0:
        return 0.0
    i = np.arange(1, n + 1, dtype=float)
    return float(max(np.max(i / n - u), np.max(u - (i - 1.0) / n)))
