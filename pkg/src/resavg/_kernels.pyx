# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled iteration kernels; same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

cdef enum:
    AFFINE = 0
    SOFT = 1
    BOX = 2
    BALL = 3
    HALFSPACE = 4
    AFFINE_SET = 5
    POINT = 6


cdef int _apply(int kind, const double* p, Py_ssize_t n, Py_ssize_t k,
                const double* x, double* out, double* work) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s, t, r
    if kind == AFFINE:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += p[i * n + j] * x[j]
            out[i] = s + p[n * n + i]
    elif kind == SOFT:
        for i in range(n):
            t = fabs(x[i]) - p[i]
            if t > 0.0:
                out[i] = t if x[i] > 0.0 else -t
            else:
                out[i] = 0.0
    elif kind == BOX:
        for i in range(n):
            s = x[i]
            if s < p[i]:
                s = p[i]
            if s > p[n + i]:
                s = p[n + i]
            out[i] = s
    elif kind == BALL:
        s = 0.0
        for i in range(n):
            work[i] = x[i] - p[i]
            s += work[i] * work[i]
        t = sqrt(s)
        r = p[n]
        if t <= r:
            for i in range(n):
                out[i] = x[i]
        else:
            for i in range(n):
                out[i] = p[i] + (r / t) * work[i]
    elif kind == HALFSPACE:
        s = 0.0
        for i in range(n):
            s += p[i] * x[i]
        s -= p[n]
        if s <= 0.0:
            for i in range(n):
                out[i] = x[i]
        else:
            t = s / p[n + 1]
            for i in range(n):
                out[i] = x[i] - t * p[i]
    elif kind == AFFINE_SET:
        for j in range(k):
            s = 0.0
            for i in range(n):
                s += p[n + i * k + j] * (x[i] - p[i])
            work[j] = s
        for i in range(n):
            s = p[i]
            for j in range(k):
                s += p[n + i * k + j] * work[j]
            out[i] = s
    elif kind == POINT:
        for i in range(n):
            out[i] = p[i]
    else:
        return -1
    return 0


def apply_resolvent(int kind, const double[::1] p, Py_ssize_t k, const double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n)
    work = np.empty(n)
    cdef double[::1] o = out
    cdef double[::1] w = work
    if _apply(kind, &p[0], n, k, &x[0], &o[0], &w[0]) != 0:
        raise ValueError(f"unknown resolvent kind {kind}")
    return out


cdef inline double _norm(const double* v, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += v[i] * v[i]
    return sqrt(s)


def iterate(int mode, int kind_a, const double[::1] pa, Py_ssize_t ka,
            int kind_b, const double[::1] pb, Py_ssize_t kb, double lambda1,
            double[::1] x0, double step_tol, Py_ssize_t max_iters,
            double divergence_norm, Py_ssize_t thin):
    cdef Py_ssize_t n = x0.shape[0]
    cdef bint compose = mode == 1
    cdef double l2 = 1.0 - lambda1
    cdef Py_ssize_t nstore = max_iters // thin + 2

    x_arr = np.array(x0, dtype=np.float64)
    steps_arr = np.empty(max_iters)
    idx_arr = np.empty(nstore, dtype=np.int64)
    xs_arr = np.empty((nstore, n))
    aux_arr = np.empty((nstore, n)) if compose else np.empty((1, n))
    buf = np.empty((4, n))

    cdef double[::1] x = x_arr
    cdef double[::1] steps = steps_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef double[:, ::1] xs = xs_arr
    cdef double[:, ::1] auxs = aux_arr
    cdef double[:, ::1] b = buf
    cdef double* ya = &b[0, 0]
    cdef double* yb = &b[1, 0]
    cdef double* xn = &b[2, 0]
    cdef double* work = &b[3, 0]
    cdef const double* ppa = &pa[0]
    cdef const double* ppb = &pb[0]

    cdef Py_ssize_t it, i, nst = 0, niter = 0
    cdef int status = 1, err = 0
    cdef double step, d

    with nogil:
        if _norm(&x[0], n) >= divergence_norm:
            status = 2
        else:
            for it in range(max_iters):
                if compose:
                    err |= _apply(kind_b, ppb, n, kb, &x[0], ya, work)
                    if it % thin == 0:
                        idx[nst] = it
                        for i in range(n):
                            xs[nst, i] = x[i]
                            auxs[nst, i] = ya[i]
                        nst += 1
                    err |= _apply(kind_a, ppa, n, ka, ya, xn, work)
                else:
                    if it % thin == 0:
                        idx[nst] = it
                        for i in range(n):
                            xs[nst, i] = x[i]
                        nst += 1
                    err |= _apply(kind_a, ppa, n, ka, &x[0], ya, work)
                    err |= _apply(kind_b, ppb, n, kb, &x[0], yb, work)
                    for i in range(n):
                        xn[i] = lambda1 * ya[i] + l2 * yb[i]
                step = 0.0
                for i in range(n):
                    d = xn[i] - x[i]
                    step += d * d
                    x[i] = xn[i]
                step = sqrt(step)
                steps[it] = step
                niter = it + 1
                if err != 0:
                    break
                if _norm(&x[0], n) >= divergence_norm:
                    status = 2
                    break
                if step <= step_tol:
                    status = 0
                    break
        if compose and err == 0:
            err |= _apply(kind_b, ppb, n, kb, &x[0], ya, work)
        idx[nst] = niter
        for i in range(n):
            xs[nst, i] = x[i]
            if compose:
                auxs[nst, i] = ya[i]
        nst += 1
    if err != 0:
        raise ValueError("unknown resolvent kind")
    aux = buf[0].copy() if compose else None
    return (
        x_arr, aux, steps_arr[:niter].copy(), idx_arr[:nst].copy(), xs_arr[:nst].copy(),
        aux_arr[:nst].copy() if compose else None, status, niter,
    )
