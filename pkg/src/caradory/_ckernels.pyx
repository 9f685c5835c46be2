# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contracts as ``caradory._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, INFINITY

cnp.import_array()

cdef int LS_MAX_ITER = 60
# consecutive iterations without strict decrease before reporting STALLED
cdef int STALL_PATIENCE = 3
# gaps below this fraction of the squared residual norm are rounding noise
cdef double GAP_FLOOR = 1e-14

cdef enum:
    ST_CONVERGED = 0
    ST_ITER_CAP = 1
    ST_STALLED = 2

CONVERGED = ST_CONVERGED
ITER_CAP = ST_ITER_CAP
STALLED = ST_STALLED


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


def nep_argmin(const double[:, ::1] V, const double[::1] g, const double[::1] x, double lam):
    cdef Py_ssize_t m = V.shape[0], n = V.shape[1], i, j, best = 0
    cdef double s, dist, diff, best_s = INFINITY
    with nogil:
        for i in range(m):
            s = 0.0
            dist = 0.0
            for j in range(n):
                s += V[i, j] * g[j]
                diff = V[i, j] - x[j]
                dist += diff * diff
            s += lam * dist
            if s < best_s:
                best_s = s
                best = i
    return best


cdef double _dual_direction(const double* y, double p, Py_ssize_t n,
                            double* u, double* w) noexcept nogil:
    # returns ||y||_p; fills u = grad ||y||_p and w = y / ||y||_p
    cdef Py_ssize_t i
    cdef double scale = 0.0, s = 0.0, root, wi
    for i in range(n):
        if fabs(y[i]) > scale:
            scale = fabs(y[i])
    if scale == 0.0:
        for i in range(n):
            u[i] = 0.0
            w[i] = 0.0
        return 0.0
    for i in range(n):
        s += pow(fabs(y[i]) / scale, p)
    root = pow(s, 1.0 / p)
    for i in range(n):
        wi = (y[i] / scale) / root
        w[i] = wi
        if wi > 0.0:
            u[i] = pow(wi, p - 1.0)
        elif wi < 0.0:
            u[i] = -pow(-wi, p - 1.0)
        else:
            u[i] = 0.0
    return scale * root


cdef void _derivs(const double* y, const double* d, double gam, double p, Py_ssize_t n,
                  double* buf, double* u, double* w, double* dphi, double* curv) noexcept nogil:
    cdef Py_ssize_t i
    cdef double norm, ud = 0.0, acc = 0.0
    for i in range(n):
        buf[i] = y[i] + gam * d[i]
    norm = _dual_direction(buf, p, n, u, w)
    if norm == 0.0:
        dphi[0] = 0.0
        curv[0] = 1.0
        return
    for i in range(n):
        ud += u[i] * d[i]
        acc += pow(fabs(w[i]), p - 2.0) * d[i] * d[i]
    dphi[0] = norm * ud
    curv[0] = (2.0 - p) * ud * ud + (p - 1.0) * acc


cdef double _line_search(const double* y, const double* d, double p, double gmax, Py_ssize_t n,
                         double* buf, double* u, double* w) noexcept nogil:
    cdef double dd, yd, g, d0, c0, dh, ch, lo, hi, gam, dg, cg, step
    cdef int it
    if p == 2.0:
        dd = _dot(d, d, n)
        if dd == 0.0:
            return 0.0
        g = -_dot(y, d, n) / dd
        if g < 0.0:
            g = 0.0
        if g > gmax:
            g = gmax
        return g
    _derivs(y, d, 0.0, p, n, buf, u, w, &d0, &c0)
    if d0 >= 0.0:
        return 0.0
    _derivs(y, d, gmax, p, n, buf, u, w, &dh, &ch)
    if dh <= 0.0:
        return gmax
    lo = 0.0
    hi = gmax
    if c0 > 0.0:
        gam = -d0 / c0
    else:
        gam = 0.5 * gmax
    if gam >= hi:
        gam = 0.5 * hi
    for it in range(LS_MAX_ITER):
        _derivs(y, d, gam, p, n, buf, u, w, &dg, &cg)
        if fabs(dg) <= 1e-15 * fabs(d0):
            break
        if dg > 0.0:
            hi = gam
        else:
            lo = gam
        if hi - lo <= 1e-16 * (hi if hi > 1.0 else 1.0):
            break
        if cg > 0.0:
            step = gam - dg / cg
        else:
            step = -1.0
        if lo < step < hi:
            gam = step
        else:
            gam = 0.5 * (lo + hi)
    if gam < 0.0:
        gam = 0.0
    if gam > gmax:
        gam = gmax
    return gam


def simplex_correction(const double[:, ::1] A, const double[::1] target, double p,
                       cnp.ndarray w_arr, double tol, long max_iter):
    cdef Py_ssize_t k = A.shape[0], n = A.shape[1], i, j, s, a
    cdef double[::1] w = w_arr
    cdef double[::1] x = np.empty(n)
    cdef double[::1] y = np.empty(n)
    cdef double[::1] grad = np.empty(n)
    cdef double[::1] dvec = np.empty(n)
    cdef double[::1] gw = np.empty(k)
    cdef double[::1] buf = np.empty(n)
    cdef double[::1] ub = np.empty(n)
    cdef double[::1] wb = np.empty(n)
    cdef double gap = INFINITY, wg, away_gap, gam, gmax, wa, norm, best
    cdef double fval, prev_fval = INFINITY
    cdef long it = 0
    cdef int status = ST_ITER_CAP, flat = 0
    with nogil:
        while True:
            for j in range(n):
                x[j] = 0.0
            for i in range(k):
                if w[i] != 0.0:
                    for j in range(n):
                        x[j] += w[i] * A[i, j]
            for j in range(n):
                y[j] = x[j] - target[j]
            if p == 2.0:
                fval = 0.0
                for j in range(n):
                    grad[j] = y[j]
                    fval += y[j] * y[j]
            else:
                norm = _dual_direction(&y[0], p, n, &ub[0], &wb[0])
                fval = norm
                for j in range(n):
                    grad[j] = norm * ub[j]
            if fval < prev_fval:
                flat = 0
                prev_fval = fval
            else:
                flat += 1
            wg = 0.0
            s = 0
            for i in range(k):
                gw[i] = _dot(&A[i, 0], &grad[0], n)
                wg += w[i] * gw[i]
                if gw[i] < gw[s]:
                    s = i
            gap = wg - gw[s]
            if gap <= tol:
                status = ST_CONVERGED
                break
            if flat >= STALL_PATIENCE or gap <= GAP_FLOOR * (fval if p == 2.0 else fval * fval):
                status = ST_STALLED
                break
            if it == max_iter:
                break
            a = -1
            for i in range(k):
                if w[i] > 0.0 and (a < 0 or gw[i] > gw[a]):
                    a = i
            away_gap = gw[a] - wg
            if gap >= away_gap or k == 1:
                for j in range(n):
                    dvec[j] = A[s, j] - x[j]
                gam = _line_search(&y[0], &dvec[0], p, 1.0, n, &buf[0], &ub[0], &wb[0])
                if gam <= 0.0:
                    status = ST_STALLED
                    break
                for i in range(k):
                    w[i] *= 1.0 - gam
                w[s] += gam
                if gam >= 1.0:
                    for i in range(k):
                        w[i] = 0.0
                    w[s] = 1.0
            else:
                wa = w[a]
                gmax = wa / (1.0 - wa)
                for j in range(n):
                    dvec[j] = x[j] - A[a, j]
                gam = _line_search(&y[0], &dvec[0], p, gmax, n, &buf[0], &ub[0], &wb[0])
                if gam <= 0.0:
                    status = ST_STALLED
                    break
                for i in range(k):
                    w[i] *= 1.0 + gam
                w[a] -= gam
                if gam >= gmax:
                    w[a] = 0.0
            it += 1
    return w_arr, gap, it, status
