# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``.

Same algorithms, scalar loops instead of array passes; the Laguerre
recurrence and the reduced normalizer release the GIL.
"""
import numpy as np

from libc.math cimport exp, log, log1p, expm1, fabs, sqrt, isnan, INFINITY

cdef double RESCALE = 1e100
cdef int MAX_DOUBLINGS = 1100
cdef int MODE_BISECTIONS = 64
cdef int SCALE_BISECTIONS = 40
cdef double KAPPA = 1.0


def laguerre_diff(int n, z_in):
    z_arr = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t m = z.shape[0]
    out_l = 1.0 - z_arr
    out_d = -z_arr
    out_s = np.zeros(m)
    cdef double[::1] ol = out_l
    cdef double[::1] od = out_d
    cdef double[::1] os = out_s
    cdef Py_ssize_t i
    cdef int k
    cdef double inv, sc, fk
    cdef bint rescale
    if n == 0:
        return np.ones(m), np.zeros(m), out_s
    with nogil:
        # k outer, nodes inner: the inner loop is branch-light and vectorizes
        for k in range(1, n):
            inv = 1.0 / (k + 1)
            fk = k * inv
            rescale = False
            for i in range(m):
                od[i] = fk * od[i] - z[i] * inv * ol[i]
                ol[i] = ol[i] + od[i]
                rescale = rescale | (fabs(ol[i]) > RESCALE)
            if rescale:
                for i in range(m):
                    if fabs(ol[i]) > RESCALE:
                        sc = 1.0 / fabs(ol[i])
                        ol[i] = ol[i] * sc
                        od[i] = od[i] * sc
                        os[i] = os[i] - log(sc)
    return out_l, out_d, out_s


cdef inline double phi2(double t) nogil:
    if fabs(t) < 1e-3:
        return 0.5 + t * (1.0 / 6 + t * (1.0 / 24 + t / 120))
    return (expm1(t) - t) / (t * t)


cdef inline double kfun(double u) nogil:
    if fabs(u) < 1e-2:
        return 0.5 + u * (1.0 / 3 + u * (1.0 / 8 + u / 30))
    return (u * exp(u) - expm1(u)) / (u * u)


cdef inline double gker(double c, double u) nogil:
    cdef double d
    if fabs(c - 1.0) < 0.5:
        d = c - 1.0
        return u * u * (exp(u) * d * phi2(d * u) + kfun(u)) / c
    return u * u * (c * phi2(c * u) - phi2(u)) / (c - 1.0)


cdef inline double hfun(double u, double c, double a, double psi) nogil:
    cdef double v = (a + 1.0) * u - gker(c, u) / psi
    if isnan(v):
        return -INFINITY
    return v


cdef inline double log_abs_g(double u, double beta) nogil:
    cdef double t = beta * u
    cdef double le
    if t == 0.0:
        le = 0.0
    elif t > 30.0:
        le = t - log(t) + log1p(-exp(-t))
    elif t < -30.0:
        le = log1p(-exp(t)) - log(-t)
    else:
        le = log(expm1(t) / t)
    return u + log(fabs(u)) + le


cdef double find_mode(double beta, double a, double psi) nogil:
    cdef double s1 = a + 1.0
    cdef double target, sg, lo, hi, mid
    cdef int it
    if s1 == 0.0:
        return 0.0
    target = log(fabs(s1) * psi)
    sg = 1.0 if s1 > 0 else -1.0
    if log_abs_g(sg, beta) - target < 0:
        lo = 1.0
        hi = 2.0
        for it in range(MAX_DOUBLINGS):
            if not (log_abs_g(sg * hi, beta) - target < 0):
                break
            lo = hi
            hi = hi * 2.0
    else:
        lo = 0.5
        hi = 1.0
        for it in range(MAX_DOUBLINGS):
            if not (log_abs_g(sg * lo, beta) - target >= 0):
                break
            lo = lo * 0.5
            hi = hi * 0.5
    for it in range(MODE_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if log_abs_g(sg * mid, beta) - target < 0:
            lo = mid
        else:
            hi = mid
    return sg * 0.5 * (lo + hi)


cdef double side_scale(double u0, double h0, double sgn, double s0,
                       double c, double a, double psi) nogil:
    cdef double lo = 0.0
    cdef double hi = s0
    cdef double mid
    cdef int it
    for it in range(MAX_DOUBLINGS):
        if not (hfun(u0 + sgn * hi, c, a, psi) - h0 + KAPPA >= 0):
            break
        lo = hi
        hi = hi * 2.0
    for it in range(SCALE_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if hfun(u0 + sgn * mid, c, a, psi) - h0 + KAPPA >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef double side_logsum(double u0, double h0, double sgn, double s,
                        double c, double a, double psi,
                        const double[::1] nodes, const double[::1] lw,
                        double cutoff) nogil:
    # streaming log-sum-exp over the nodes, stopped once the integrand is negligible
    cdef Py_ssize_t i, n = nodes.shape[0]
    cdef double hv, t, mx = -INFINITY, acc = 0.0
    for i in range(n):
        hv = hfun(u0 + sgn * s * nodes[i], c, a, psi) - h0
        t = lw[i] + nodes[i] + hv
        if t > mx:
            if mx > -INFINITY:
                acc = acc * exp(mx - t)
            acc = acc + 1.0
            mx = t
        elif t > -INFINITY:
            acc = acc + exp(t - mx)
        if hv < -cutoff:
            break
    return mx + log(acc) + log(s)


def reduced_log_normalizer(double beta, double a, psi_in, nodes_in, log_weights_in,
                           double cutoff=60.0):
    cdef double[::1] psi = np.ascontiguousarray(np.atleast_1d(psi_in), dtype=np.float64)
    cdef const double[::1] nodes = np.ascontiguousarray(nodes_in, dtype=np.float64)
    cdef const double[::1] lw = np.ascontiguousarray(log_weights_in, dtype=np.float64)
    cdef Py_ssize_t j, m = psi.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double c = beta + 1.0
    cdef double u0, h0, curv, s0, sr, sl, lr, ll, hi
    with nogil:
        for j in range(m):
            u0 = find_mode(beta, a, psi[j])
            h0 = hfun(u0, c, a, psi[j])
            curv = (a + 1.0) + exp(c * u0) / psi[j]
            if curv > 0 and curv < INFINITY:
                s0 = 1.0 / sqrt(curv)
            else:
                s0 = 1.0
            sr = side_scale(u0, h0, 1.0, s0, c, a, psi[j])
            sl = side_scale(u0, h0, -1.0, s0, c, a, psi[j])
            lr = side_logsum(u0, h0, 1.0, sr, c, a, psi[j], nodes, lw, cutoff)
            ll = side_logsum(u0, h0, -1.0, sl, c, a, psi[j], nodes, lw, cutoff)
            hi = lr if lr > ll else ll
            if hi == -INFINITY:
                o[j] = -INFINITY
            else:
                o[j] = h0 + hi + log(exp(lr - hi) + exp(ll - hi))
    return out
