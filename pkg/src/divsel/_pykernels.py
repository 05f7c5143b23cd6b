"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` step for step; they are used when the compiled
extension is not available or when ``DIVSEL_PURE_PYTHON=1``.
"""
from __future__ import annotations

import numpy as np

from .divergence import _kernel

_RESCALE = 1e100
_MAX_DOUBLINGS = 1100
_MODE_BISECTIONS = 64
_SCALE_BISECTIONS = 40
_KAPPA = 1.0


def laguerre_diff(n, z):
    """Return ``(L_n(z), L_n(z) - L_{n-1}(z), log_scale)``.

    Both polynomials are divided by ``exp(log_scale)``.  The difference form of
    the recurrence avoids the loss of accuracy of the three-term form near
    clustered roots.
    """
    z = np.array(z, dtype=float, copy=True)
    ls = np.zeros_like(z)
    if n == 0:
        return np.ones_like(z), np.zeros_like(z), ls
    lval = 1.0 - z
    d = -z.copy()
    for k in range(1, n):
        d = (k * d - z * lval) / (k + 1)
        lval = lval + d
        big = np.abs(lval) > _RESCALE
        if big.any():
            s = np.where(big, 1.0 / np.abs(lval), 1.0)
            lval *= s
            d *= s
            ls -= np.log(s)
    return lval, d, ls


def _log_abs_g(u, beta):
    # ln|e^u (e^{beta u} - 1) / beta|
    t = beta * u
    out = np.zeros_like(u)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        hi = t > 30
        lo = t < -30
        mid = ~(hi | lo) & (t != 0)
        out[hi] = t[hi] - np.log(t[hi]) + np.log1p(-np.exp(-t[hi]))
        out[lo] = np.log1p(-np.exp(t[lo])) - np.log(-t[lo])
        out[mid] = np.log(np.expm1(t[mid]) / t[mid])
        return u + np.log(np.abs(u)) + out


def _mode(beta, a, psi):
    s1 = a + 1.0
    if s1 == 0:
        return np.zeros_like(psi)
    target = np.log(abs(s1) * psi)
    sg = 1.0 if s1 > 0 else -1.0

    def f(v):
        return _log_abs_g(sg * v, beta) - target

    v = np.ones_like(psi)
    below = f(v) < 0
    lo = np.where(below, 1.0, 0.5)
    hi = np.where(below, 2.0, 1.0)
    # walk the bracket [lo, 2 lo] up or down until it straddles the root
    for _ in range(_MAX_DOUBLINGS):
        up = below & (f(hi) < 0)
        down = ~below & (f(lo) >= 0)
        if not (up.any() or down.any()):
            break
        lo = np.where(up, hi, np.where(down, lo * 0.5, lo))
        hi = np.where(up, hi * 2.0, np.where(down, hi * 0.5, hi))
    for _ in range(_MODE_BISECTIONS):
        mid = 0.5 * (lo + hi)
        neg = f(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return sg * 0.5 * (lo + hi)


def _h(u, c, a, psi):
    with np.errstate(over="ignore", invalid="ignore"):
        v = (a + 1.0) * u - _kernel(c, u) / psi
    return np.where(np.isnan(v), -np.inf, v)


def _side_scale(u0, h0, sgn, s0, c, a, psi):
    def f(s):
        return _h(u0 + sgn * s, c, a, psi) - h0 + _KAPPA

    lo = np.zeros_like(s0)
    hi = s0.copy()
    for _ in range(_MAX_DOUBLINGS):
        go = f(hi) >= 0
        if not go.any():
            break
        lo = np.where(go, hi, lo)
        hi = np.where(go, hi * 2.0, hi)
    for _ in range(_SCALE_BISECTIONS):
        mid = 0.5 * (lo + hi)
        pos = f(mid) >= 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


def _side_logsum(u0, h0, sgn, s, c, a, psi, nodes, log_weights, cutoff):
    n = nodes.size
    out = np.empty_like(psi)
    todo = np.arange(psi.size)
    m = min(256, n)
    while todo.size:
        z = nodes[:m]
        hv = _h(u0[todo, None] + sgn * s[todo, None] * z, c, a, psi[todo, None]) - h0[todo, None]
        done = (hv[:, -1] < -cutoff) | (m == n)
        t = log_weights[:m] + z + hv
        tm = np.max(t, axis=1)
        with np.errstate(invalid="ignore"):
            val = tm + np.log(np.sum(np.exp(t - tm[:, None]), axis=1))
        out[todo[done]] = val[done] + np.log(s[todo[done]])
        todo = todo[~done]
        m = min(2 * m, n)
    return out


def reduced_log_normalizer(beta, a, psi, nodes, log_weights, cutoff=60.0):
    """``ln of the integral over u of exp((a+1) u - g(beta+1, e^u) / psi)``.

    The integral is split at the mode of the integrand and each half line is
    mapped onto the Laguerre nodes with a scale chosen so the integrand has
    fallen by one nat at the first unit node.
    """
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    c = beta + 1.0
    u0 = _mode(beta, a, psi)
    h0 = _h(u0, c, a, psi)
    with np.errstate(over="ignore"):
        curv = (a + 1.0) + np.exp(c * u0) / psi
    s0 = np.where(np.isfinite(curv) & (curv > 0), 1.0 / np.sqrt(np.abs(curv)), 1.0)
    parts = []
    for sgn in (1.0, -1.0):
        s = _side_scale(u0, h0, sgn, s0, c, a, psi)
        parts.append(_side_logsum(u0, h0, sgn, s, c, a, psi, nodes, log_weights, cutoff))
    return h0 + np.logaddexp(parts[0], parts[1])
