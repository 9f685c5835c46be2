"""The lp objective family.

``SmoothSquared`` (p in [2, inf)): ``f(x) = 0.5 ||x - x*||_p^2``, convex and
(p-1)-smooth in the lp norm.

``NonsmoothNorm`` (p in [1, 2) or inf): ``f(x) = ||x - x*||_p``, handled through
its Moreau envelope ``f_beta``. The prox of a norm is evaluated with the Moreau
decomposition ``prox_{beta ||.||}(d) = d - proj_{beta B_*}(d)``, where ``B_*`` is
the unit ball of the dual norm.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from caradory.errors import InputError, NumericalError
from caradory.geometry import l2_lipschitz_constant, lp_norm

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200


class Mode(str, enum.Enum):
    SMOOTH_SQUARED = "smooth_squared"
    NONSMOOTH_NORM = "nonsmooth_norm"


def parse_exponent(p):
    """Accept floats, ints and the strings ``'inf'``/``'infinity'``."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        try:
            p = float(p)
        except ValueError as exc:
            raise InputError(f"invalid exponent {p!r}") from exc
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise InputError(f"exponent must lie in [1, inf], got {p}")
    return p


def mode_for(p):
    if 2.0 <= p < math.inf:
        return Mode.SMOOTH_SQUARED
    return Mode.NONSMOOTH_NORM


def dual_exponent(p):
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class ObjectiveSpec:
    target: np.ndarray
    p: float

    def __post_init__(self):
        t = np.ascontiguousarray(self.target, dtype=np.float64)
        if t.ndim != 1:
            raise InputError(f"target must be one-dimensional, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InputError("target must be finite")
        t.setflags(write=False)
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "p", parse_exponent(self.p))

    @property
    def mode(self):
        return mode_for(self.p)

    @property
    def n(self):
        return self.target.shape[0]


def _require(spec, mode):
    if spec.mode is not mode:
        raise InputError(f"operation needs {mode.value} mode, objective with p={spec.p} is {spec.mode.value}")


def lp_sq_value(x, spec):
    """``0.5 ||x - x*||_p^2``."""
    _require(spec, Mode.SMOOTH_SQUARED)
    return 0.5 * lp_norm(np.asarray(x) - spec.target, spec.p) ** 2


def lp_sq_gradient(x, spec):
    """Gradient ``||d||_p^{2-p} sign(d) |d|^{p-1}`` with ``d = x - x*``; zero at ``x = x*``."""
    _require(spec, Mode.SMOOTH_SQUARED)
    d = np.asarray(x, dtype=np.float64) - spec.target
    scale = float(np.max(np.abs(d))) if d.size else 0.0
    if scale == 0.0:
        return np.zeros_like(d)
    if spec.p == 2.0:
        return d
    z = d / scale
    s = float(np.sum(np.abs(z) ** spec.p))
    # ||d||^{2-p} |d|^{p-1} = scale * s^{(2-p)/p} |z|^{p-1}
    return scale * s ** ((2.0 - spec.p) / spec.p) * np.sign(z) * np.abs(z) ** (spec.p - 1.0)


def lp_value(x, spec):
    """``||x - x*||_p`` (max-abs for p = inf)."""
    _require(spec, Mode.NONSMOOTH_NORM)
    return lp_norm(np.asarray(x) - spec.target, spec.p)


def objective_value(x, spec):
    """Value in whichever mode the exponent selects."""
    if spec.mode is Mode.SMOOTH_SQUARED:
        return lp_sq_value(x, spec)
    return lp_value(x, spec)


def _project_l1_ball(y, radius):
    a = np.abs(y)
    if a.sum() <= radius:
        return y.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(y) * np.maximum(a - theta, 0.0)


def _shrink(a, mu, q):
    """Solve ``z + mu z^{q-1} = a`` componentwise for ``z >= 0`` (Newton from z = a)."""
    z = a.copy()
    if mu == 0.0:
        return z
    for _ in range(100):
        zq = z ** (q - 2.0)
        g = z + mu * zq * z - a
        dg = 1.0 + mu * (q - 1.0) * zq
        z_new = np.maximum(z - g / dg, 0.0)
        if np.all(np.abs(z_new - z) <= 1e-16 * np.maximum(a, 1e-300)):
            return z_new
        z = z_new
    return z


def _project_lq_ball_bisection(y, radius, q):
    a = np.abs(y)
    lo, hi = 0.0, 1.0
    while lp_norm(_shrink(a, hi, q), q) > radius:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise NumericalError("could not bracket the lq-ball multiplier", {"q": q, "radius": radius})
    tol = BISECTION_TOL * max(1.0, radius)
    mid, resid = hi, math.inf
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        resid = lp_norm(_shrink(a, mid, q), q) - radius
        if abs(resid) <= tol:
            break
        if resid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * hi:
            break
    else:
        raise NumericalError(
            "lq-ball projection bisection did not converge",
            {"q": q, "radius": radius, "residual": resid, "multiplier": mid},
        )
    z = _shrink(a, mid, q)
    if abs(resid) > tol:
        # bracket collapsed to machine precision; keep the feasible end
        z = _shrink(a, hi, q)
        resid = lp_norm(z, q) - radius
        if resid > 10 * tol:
            raise NumericalError(
                "lq-ball projection bisection stalled above tolerance",
                {"q": q, "radius": radius, "residual": resid, "multiplier": hi},
            )
    return np.sign(y) * z


def project_dual_ball(y, radius, p):
    """Euclidean projection of ``y`` onto ``{z : ||z||_q <= radius}``, ``q`` dual to ``p``."""
    p = parse_exponent(p)
    if not radius > 0:
        raise InputError(f"radius must be positive, got {radius}")
    y = np.asarray(y, dtype=np.float64)
    q = dual_exponent(p)
    if math.isinf(q):
        return np.clip(y, -radius, radius)
    if q == 1.0:
        return _project_l1_ball(y, radius)
    if lp_norm(y, q) <= radius:
        return y.copy()
    if q == 2.0:
        return y * (radius / lp_norm(y, 2.0))
    if q > 2.0:
        return _project_lq_ball_bisection(y, radius, q)
    raise InputError(f"dual-ball projection supports p in [1, 2] or inf, got p={p}")


def prox_lp(x, beta, spec):
    """``prox_{beta ||. - x*||_p}(x) = x* + d - proj_{beta B_*}(d)`` with ``d = x - x*``."""
    _require(spec, Mode.NONSMOOTH_NORM)
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta}")
    d = np.asarray(x, dtype=np.float64) - spec.target
    return spec.target + (d - project_dual_ball(d, beta, spec.p))


def moreau_gradient(x, beta, spec):
    """``(x - prox_{beta f}(x)) / beta``; this equals ``proj_{beta B_*}(d) / beta``."""
    _require(spec, Mode.NONSMOOTH_NORM)
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta}")
    d = np.asarray(x, dtype=np.float64) - spec.target
    return project_dual_ball(d, beta, spec.p) / beta


def moreau_value(x, beta, spec):
    """``f(prox) + ||x - prox||_2^2 / (2 beta)``."""
    prox = prox_lp(x, beta, spec)
    r = np.asarray(x, dtype=np.float64) - prox
    return lp_value(prox, spec) + float(r @ r) / (2.0 * beta)


@dataclass(frozen=True)
class FixedBeta:
    """Constant smoothing ``beta = epsilon / G_2^2``."""

    epsilon: float
    G_2: float

    def beta(self, t):
        return self.epsilon / self.G_2 ** 2


@dataclass(frozen=True)
class DecayingBeta:
    """``beta_t = 2 (D_2 / G_2) / sqrt(t + 2)``."""

    D_2: float
    G_2: float

    def beta(self, t):
        return 2.0 * (self.D_2 / self.G_2) / math.sqrt(t + 2.0)


__all__ = [
    "Mode", "ObjectiveSpec", "FixedBeta", "DecayingBeta", "parse_exponent", "mode_for",
    "dual_exponent", "lp_sq_value", "lp_sq_gradient", "lp_value", "objective_value",
    "project_dual_ball", "prox_lp", "moreau_gradient", "moreau_value", "l2_lipschitz_constant",
]
