"""Reference (numpy-only) implementations of the hot kernels.

The compiled module ``_ckernels`` exports the same four functions with the
same semantics; :mod:`caradory.kernels` picks one at import time.
"""
import math

import numpy as np

CONVERGED = 0
ITER_CAP = 1
STALLED = 2

_LS_MAX_ITER = 60
# consecutive iterations without strict decrease before reporting STALLED
_STALL_PATIENCE = 3
# gaps below this fraction of the squared residual norm are rounding noise
_GAP_FLOOR = 1e-14


def argmin_dot(V, g):
    """Smallest index minimizing ``<V[i], g>``."""
    return int(np.argmin(V @ g))


def nep_argmin(V, g, x, lam):
    """Smallest index minimizing ``<V[i], g> + lam * ||V[i] - x||_2^2``."""
    scores = V @ g
    if lam != 0.0:
        diff = V - x
        scores = scores + lam * np.einsum("ij,ij->i", diff, diff)
    return int(np.argmin(scores))


def max_pairwise_distance(V, p):
    """Exact ``max_{i<j} ||V[i] - V[j]||_p`` by full scan."""
    m = V.shape[0]
    best = 0.0
    for i in range(m - 1):
        diff = np.abs(V[i + 1:] - V[i])
        if math.isinf(p):
            d = diff.max(axis=1)
        else:
            scale = diff.max(axis=1)
            scale[scale == 0.0] = 1.0
            d = scale * np.sum((diff / scale[:, None]) ** p, axis=1) ** (1.0 / p)
        best = max(best, float(d.max()))
    return best


def _dual_direction(y, p):
    """Return ``(||y||_p, u, w)`` with ``u = grad ||y||_p`` and ``w = y / ||y||_p``."""
    scale = np.max(np.abs(y))
    if scale == 0.0:
        return 0.0, np.zeros_like(y), np.zeros_like(y)
    z = y / scale
    s = np.sum(np.abs(z) ** p)
    norm = scale * s ** (1.0 / p)
    w = z / s ** (1.0 / p)
    u = np.sign(w) * np.abs(w) ** (p - 1.0)
    return norm, u, w


def _line_search(y, d, p, gmax):
    """Minimize ``phi(g) = 0.5 ||y + g d||_p^2`` over ``[0, gmax]`` (safeguarded Newton)."""
    if p == 2.0:
        dd = d @ d
        if dd == 0.0:
            return 0.0
        return min(max(-(y @ d) / dd, 0.0), gmax)

    def derivs(gam):
        norm, u, w = _dual_direction(y + gam * d, p)
        if norm == 0.0:
            return 0.0, 1.0
        ud = u @ d
        curv = (2.0 - p) * ud * ud + (p - 1.0) * np.sum(np.abs(w) ** (p - 2.0) * d * d)
        return norm * ud, curv

    d0, c0 = derivs(0.0)
    if d0 >= 0.0:
        return 0.0
    dh, _ = derivs(gmax)
    if dh <= 0.0:
        return gmax
    lo, hi = 0.0, gmax
    gam = -d0 / c0 if c0 > 0.0 else 0.5 * gmax
    if gam >= hi:
        gam = 0.5 * hi
    for _ in range(_LS_MAX_ITER):
        dg, cg = derivs(gam)
        if abs(dg) <= 1e-15 * abs(d0):
            break
        if dg > 0.0:
            hi = gam
        else:
            lo = gam
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
        step = gam - dg / cg if cg > 0.0 else -1.0
        gam = step if lo < step < hi else 0.5 * (lo + hi)
    return min(max(gam, 0.0), gmax)


def simplex_correction(A, target, p, w, tol, max_iter):
    """Away-step Frank-Wolfe on ``w -> 0.5 ||A^T w - target||_p^2`` over the simplex.

    ``w`` is modified in place and returned. Returns ``(w, fw_gap, iterations, status)``
    where ``status`` is CONVERGED (gap <= tol), ITER_CAP, or STALLED (the line
    search made no progress, i.e. the machine-precision floor was reached).
    """
    k = A.shape[0]
    gap = math.inf
    status = ITER_CAP
    it = 0
    prev_val, flat = math.inf, 0
    for it in range(max_iter + 1):
        x = w @ A
        y = x - target
        if p == 2.0:
            grad = y
            val = float(y @ y)
        else:
            norm, u, _ = _dual_direction(y, p)
            grad = norm * u
            val = norm
        if val < prev_val:
            prev_val, flat = val, 0
        else:
            flat += 1
        gw = A @ grad
        wg = float(w @ gw)
        s = int(np.argmin(gw))
        gap = wg - float(gw[s])
        if gap <= tol:
            status = CONVERGED
            break
        if flat >= _STALL_PATIENCE or gap <= _GAP_FLOOR * (val if p == 2.0 else val * val):
            status = STALLED
            break
        if it == max_iter:
            break
        active = np.flatnonzero(w > 0.0)
        a = int(active[np.argmax(gw[active])])
        away_gap = float(gw[a]) - wg
        if gap >= away_gap or k == 1:
            d = A[s] - x
            gam = _line_search(y, d, p, 1.0)
            if gam <= 0.0:
                status = STALLED
                break
            w *= 1.0 - gam
            w[s] += gam
            if gam >= 1.0:
                w[:] = 0.0
                w[s] = 1.0
        else:
            wa = w[a]
            gmax = wa / (1.0 - wa)
            d = x - A[a]
            gam = _line_search(y, d, p, gmax)
            if gam <= 0.0:
                status = STALLED
                break
            w *= 1.0 + gam
            w[a] -= gam
            if gam >= gmax:
                w[a] = 0.0
    return w, gap, it, status
