# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched greedy allocation, truthful VCG revenue, and
adaptive Simpson quadrature specialised to the built-in distribution families.

Mirrors the API of ``_pure``; selected at import time by ``kernels``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, expm1, fabs, pow

cnp.import_array()

# Distribution family codes (see kernels._FAMILY_CODES):
#   0 uniform(v_bar)   1 power(v_bar, a)   2 truncexp(v_bar, rate)


cdef double _cdf(int code, const double* p, double u) noexcept nogil:
    if u <= 0.0:
        return 0.0
    if code == 0:
        if u >= p[0]:
            return 1.0
        return u / p[0]
    if code == 1:
        if u >= p[0]:
            return 1.0
        return pow(u / p[0], p[1])
    # truncated exponential
    if u >= p[0]:
        return 1.0
    return expm1(-p[1] * u) / expm1(-p[1] * p[0])


cdef double _pdf(int code, const double* p, double u) noexcept nogil:
    if u < 0.0 or u > p[0]:
        return 0.0
    if code == 0:
        return 1.0 / p[0]
    if code == 1:
        if u == 0.0:
            return 0.0 if p[1] > 1.0 else (p[1] / p[0] if p[1] == 1.0 else INFINITY)
        return p[1] * pow(u / p[0], p[1] - 1.0) / p[0]
    return p[1] * exp(-p[1] * u) / (-expm1(-p[1] * p[0]))


cdef struct IntegrandCtx:
    int kind            # 0: (F/Fv)^m, 1: expected-payment integrand
    int code
    const double* dp
    double Fv
    int m
    int nterms
    const double* coeffs
    const long long* ef
    const long long* eg


cdef double _eval(IntegrandCtx* ctx, double u) noexcept nogil:
    cdef double w, acc, f
    cdef int t
    if ctx.kind == 0:
        w = _cdf(ctx.code, ctx.dp, u) / ctx.Fv
        return pow(w, ctx.m)
    if u <= 0.0:
        return 0.0
    w = _cdf(ctx.code, ctx.dp, u) / ctx.Fv
    f = _pdf(ctx.code, ctx.dp, u)
    acc = 0.0
    for t in range(ctx.nterms):
        acc += ctx.coeffs[t] * pow(w, <double> ctx.ef[t]) * pow(1.0 - w, <double> ctx.eg[t])
    return acc * (f / ctx.Fv) * u


cdef double _simpson(double a, double b, double fa, double fm, double fb) noexcept nogil:
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


cdef int _refine(IntegrandCtx* ctx, double a, double b, double fa, double fm,
                 double fb, double s, double tol, int depth, double* out) noexcept nogil:
    cdef double m = 0.5 * (a + b)
    cdef double lm = 0.5 * (a + m)
    cdef double rm = 0.5 * (m + b)
    cdef double flm = _eval(ctx, lm)
    cdef double frm = _eval(ctx, rm)
    cdef double sl = _simpson(a, m, fa, flm, fm)
    cdef double sr = _simpson(m, b, fm, frm, fb)
    cdef double err = sl + sr - s
    cdef double left, right
    if fabs(err) <= 15.0 * tol:
        out[0] = sl + sr + err / 15.0
        return 0
    if depth <= 0:
        return 1
    if _refine(ctx, a, m, fa, flm, fm, sl, 0.5 * tol, depth - 1, &left):
        return 1
    if _refine(ctx, m, b, fm, frm, fb, sr, 0.5 * tol, depth - 1, &right):
        return 1
    out[0] = left + right
    return 0


cdef double _integrate(IntegrandCtx* ctx, double b, double abs_tol, double rel_tol,
                       int max_depth) except? -1.0:
    if b == 0.0:
        return 0.0
    cdef double fa = _eval(ctx, 0.0)
    cdef double fb = _eval(ctx, b)
    cdef double fm = _eval(ctx, 0.5 * b)
    cdef double s = _simpson(0.0, b, fa, fm, fb)
    cdef double tol = abs_tol
    if rel_tol * fabs(s) > tol:
        tol = rel_tol * fabs(s)
    cdef double out = 0.0
    cdef int failed
    with nogil:
        failed = _refine(ctx, 0.0, b, fa, fm, fb, s, tol, max_depth, &out)
    if failed:
        from .quadrature import QuadratureError
        raise QuadratureError("no convergence within the subdivision budget")
    return out


def z_raw(int code, cnp.ndarray[double, ndim=1] params, int m, double v, double Fv,
          double abs_tol, double rel_tol, int max_depth):
    """Integral of (F(u)/F(v))^m over [0, v] for a coded family."""
    cdef IntegrandCtx ctx
    ctx.kind = 0
    ctx.code = code
    ctx.dp = &params[0]
    ctx.Fv = Fv
    ctx.m = m
    ctx.nterms = 0
    ctx.coeffs = NULL
    ctx.ef = NULL
    ctx.eg = NULL
    return _integrate(&ctx, v, abs_tol, rel_tol, max_depth)


def bstar_raw(int code, cnp.ndarray[double, ndim=1] params,
              cnp.ndarray[long long, ndim=1] exps_f,
              cnp.ndarray[long long, ndim=1] exps_g,
              cnp.ndarray[double, ndim=1] coeffs,
              double v, double Fv, double abs_tol, double rel_tol, int max_depth):
    """Expected-payment integral over [0, v] for a coded family."""
    cdef IntegrandCtx ctx
    ctx.kind = 1
    ctx.code = code
    ctx.dp = &params[0]
    ctx.Fv = Fv
    ctx.m = 0
    ctx.nterms = coeffs.shape[0]
    ctx.coeffs = &coeffs[0]
    ctx.ef = &exps_f[0]
    ctx.eg = &exps_g[0]
    return _integrate(&ctx, v, abs_tol, rel_tol, max_depth)


def greedy_assign_batch(cnp.ndarray[double, ndim=3] bids):
    """Greedy allocation per round; ties to the lowest agent index."""
    cdef Py_ssize_t nrounds = bids.shape[0]
    cdef Py_ssize_t n = bids.shape[1]
    cdef Py_ssize_t k = bids.shape[2]
    if n > 4096:
        raise ValueError("batched greedy kernel supports at most 4096 agents")
    out = np.full((nrounds, k), -1, dtype=np.int64)
    cdef long long[:, ::1] o = out
    cdef double[:, :, ::1] b = np.ascontiguousarray(bids)
    cdef char[4096] taken
    cdef Py_ssize_t r, i, j, best, fill
    cdef double bestv
    with nogil:
        for r in range(nrounds):
            for i in range(n):
                taken[i] = 0
            fill = k if k < n else n
            for j in range(fill):
                best = -1
                bestv = -INFINITY
                for i in range(n):
                    if not taken[i] and b[r, i, j] > bestv:
                        best = i
                        bestv = b[r, i, j]
                o[r, j] = best
                taken[best] = 1
    return out


def vcg_truthful_revenue_batch(cnp.ndarray[double, ndim=2] values,
                               cnp.ndarray[double, ndim=1] betas):
    """Closed-form truthful VCG revenue per round."""
    cdef Py_ssize_t nrounds = values.shape[0]
    cdef Py_ssize_t n = values.shape[1]
    cdef Py_ssize_t k = betas.shape[0]
    if n > 4096:
        raise ValueError("batched VCG kernel supports at most 4096 agents")
    out = np.zeros(nrounds, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[:, ::1] vals = np.ascontiguousarray(values)
    cdef double[::1] beta = np.ascontiguousarray(betas)
    cdef double[4096] srt
    cdef Py_ssize_t r, i, j, s
    cdef double key, acc, bnext, vnext
    with nogil:
        for r in range(nrounds):
            # insertion sort, descending
            for i in range(n):
                key = vals[r, i]
                j = i
                while j > 0 and srt[j - 1] < key:
                    srt[j] = srt[j - 1]
                    j -= 1
                srt[j] = key
            acc = 0.0
            for s in range(k):
                bnext = beta[s + 1] if s + 1 < k else 0.0
                vnext = srt[s + 1] if s + 1 < n else 0.0
                acc += (s + 1) * (beta[s] - bnext) * vnext
            o[r] = acc
    return out
