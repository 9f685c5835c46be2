"""Right-hand sides of the Frank-Wolfe convergence guarantees, evaluated per iteration.

Each bound is keyed by an id; ``evaluate_bound`` returns the bound on
``f(x_t) - min f`` at every requested ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from caradory.errors import ConfigurationError


@dataclass
class TheoryBounds:
    """Constants consumed by the bounds; only those a bound needs must be set.

    ``L``/``D`` are the smoothness constant and diameter in the norm of the
    analysis. ``mu`` (gradient domination) and ``sigma`` (sharpness) default to
    the values for the squared lp objective, 1 and sqrt(2).
    """

    L: float | None = None
    D: float | None = None
    mu: float | None = 1.0
    sigma: float | None = math.sqrt(2.0)
    r: float | None = None
    c: float | None = None
    alpha: float | None = None
    q_uc: float | None = None
    D_star: float | None = None
    D_0: float | None = None
    G_2: float | None = None
    D_2: float | None = None
    beta: float | None = None

    def __post_init__(self):
        for name, value in vars(self).items():
            if value is not None and not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value}", name)

    def need(self, *names):
        values = []
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigurationError(f"bound needs constant '{name}'", name)
            values.append(float(value))
        return values if len(values) > 1 else values[0]


def uniform_convexity_rates(q, sharp=False):
    """``(beta_1, beta_2)`` for the uniformly convex set bounds.

    With ``sharp=False`` (target outside the set) the exponent ``(q-2)/q`` is
    used, otherwise ``(q-1)/q``.
    """
    if sharp:
        e = 2.0 ** ((q - 1.0) / q)
        return (2.0 - e) / (e - 1.0), (q - 1.0) / q - (1.0 / q) * (e - 1.0)
    e = 2.0 ** ((q - 2.0) / q)
    return (2.0 - e) / (e - 1.0), (q - 2.0) / q - (2.0 / q) * (e - 1.0)


def _thm1_closed(t, b):
    L, D = b.need("L", "D")
    return 4.0 * L * D ** 2 / (t + 2.0)


def _thm1_open(t, b):
    L, D = b.need("L", "D")
    return 2.0 * L * D ** 2 / (t + 2.0)


def _thm2(t, b):
    L, D, mu, r = b.need("L", "D", "mu", "r")
    rho = 1.0 - (mu / L) * (r / D) ** 2
    return 0.5 * L * D ** 2 * rho ** (t - 1.0)


def _thm3(t, b):
    L, D, alpha, c = b.need("L", "D", "alpha", "c")
    rho = 1.0 - min(0.5, alpha * c / (4.0 * L))
    return 0.5 * L * D ** 2 * rho ** (t - 1.0)


def _thm4(t, b):
    L, D, alpha, mu = b.need("L", "D", "alpha", "mu")
    return max(4.5 * L * D ** 2, 144.0 * (L / alpha) ** 2 / mu) / (t + 2.0) ** 2


def _thm5(t, b):
    L, D, alpha, q, c = b.need("L", "D", "alpha", "q_uc", "c")
    if not q > 2:
        raise ConfigurationError("thm5 needs q_uc > 2", "q_uc")
    b1, b2 = uniform_convexity_rates(q)
    k = q / (q - 2.0)
    num = max(0.5 * L * D ** 2 * (1.0 + b1) ** k, 4.0 * (L / b2) ** k * (4.0 / (alpha * c)) ** (2.0 / (q - 2.0)))
    return num / (t + b1) ** k


def _thm6(t, b):
    L, D, alpha, q, sigma = b.need("L", "D", "alpha", "q_uc", "sigma")
    b1, b2 = uniform_convexity_rates(q, sharp=True)
    k = q / (q - 1.0)
    num = max(0.5 * L * D ** 2 * (1.0 + b1) ** k, 2.0 * (L / b2) ** k * (sigma / alpha) ** (2.0 / (q - 1.0)))
    return num / (t + b1) ** k


def _nep(t, b):
    L, Ds, D0 = b.need("L", "D_star", "D_0")
    return 2.0 * L * (Ds ** 2 + D0 ** 2) / (t + 2.0)


def _thm7(t, b):
    G, D = b.need("G_2", "D_2")
    return 4.0 * G * D / np.sqrt(t + 1.0)


def _thm8(t, b):
    # f - min f <= (f_beta - min f_beta) + beta G^2 / 2, with f_beta (1/beta)-smooth in l2
    G, D, beta = b.need("G_2", "D_2", "beta")
    return 2.0 * D ** 2 / (beta * (t + 2.0)) + 0.5 * beta * G ** 2


def _lemma2(t, b):
    L, D = b.need("L", "D")
    return np.full_like(t, 0.5 * L * D ** 2)


BOUNDS = {
    "thm1-closed": _thm1_closed,
    "thm1-open": _thm1_open,
    "thm2": _thm2,
    "thm3": _thm3,
    "thm4": _thm4,
    "thm5": _thm5,
    "thm6": _thm6,
    "nep": _nep,
    "thm7": _thm7,
    "thm8": _thm8,
    "lemma2": _lemma2,
}


def evaluate_bound(trace, bounds, which):
    """Bound values at each iteration of ``trace``.

    ``trace`` is a RunTrace or a sequence of iteration indices. ``which="thm1"``
    picks the open- or closed-loop form from the trace's step strategy.
    """
    if hasattr(trace, "records"):
        t = np.array([r.t for r in trace.records], dtype=float)
        step = trace.step
    else:
        t = np.asarray(trace, dtype=float)
        step = None
    if which == "thm1":
        if step is None:
            raise ConfigurationError("thm1 on bare iteration indices needs thm1-open or thm1-closed", "which")
        which = "thm1-open" if step == "open" else "thm1-closed"
    try:
        fn = BOUNDS[which]
    except KeyError:
        raise ConfigurationError(f"unknown bound {which!r}; choose from {sorted(BOUNDS)}", "which") from None
    return np.asarray(fn(t, bounds), dtype=float)
