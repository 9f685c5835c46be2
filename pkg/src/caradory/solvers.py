"""Frank-Wolfe family for sparse approximate convex decompositions.

Every solver returns ``(ConvexCombination, RunTrace)``. The trace holds one
record per visited iterate ``x_t``: its objective value and primal gap, its
cardinality, and the step taken from it (``gamma``, vertex, smoothing ``beta``).
The last record belongs to the terminal iterate and carries no step.
"""
from __future__ import annotations

import enum
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from caradory import kernels
from caradory.errors import ConfigurationError, DegenerateGradient, InputError
from caradory.geometry import (
    PRUNE_TOL,
    ConvexCombination,
    LqBall,
    VertexSet,
    diameter,
    l2_lipschitz_constant,
    lmo_lq_ball,
    lmo_vertices,
    lp_norm,
    nep_select,
)
from caradory.objectives import (
    DecayingBeta,
    FixedBeta,
    Mode,
    lp_sq_gradient,
    lp_sq_value,
    lp_value,
    moreau_gradient,
)


class Algorithm(str, enum.Enum):
    FW = "fw"
    NEP_FW = "nep-fw"
    FCFW = "fcfw"
    AFW = "afw"
    HCGS = "hcgs"
    SMOOTHED_FW = "smoothed-fw"


class Step(str, enum.Enum):
    OPEN_LOOP = "open"
    CLOSED_LOOP = "closed"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    ITER_CAP = "IterCap"
    DEGENERATE = "Degenerate"


_DEFAULT_STEP = {
    Algorithm.FW: Step.CLOSED_LOOP,
    Algorithm.FCFW: Step.CLOSED_LOOP,
    Algorithm.AFW: Step.CLOSED_LOOP,
    Algorithm.NEP_FW: Step.OPEN_LOOP,
    Algorithm.HCGS: Step.OPEN_LOOP,
    Algorithm.SMOOTHED_FW: Step.OPEN_LOOP,
}
_FIXED_STEP = {
    Algorithm.AFW: Step.CLOSED_LOOP,
    Algorithm.NEP_FW: Step.OPEN_LOOP,
    Algorithm.HCGS: Step.OPEN_LOOP,
    Algorithm.SMOOTHED_FW: Step.OPEN_LOOP,
}


@dataclass
class SolverConfig:
    algorithm: Algorithm = Algorithm.FW
    step: Step | None = None
    epsilon: float = 1e-2
    max_iter: int = 10_000
    L_override: float | None = None
    seed: int = 0
    inner_tolerance: float | None = None

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        if self.step is None:
            self.step = _DEFAULT_STEP[self.algorithm]
        self.step = Step(self.step)

    def validate(self, spec):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}", "epsilon")
        if int(self.max_iter) < 0:
            raise ConfigurationError(f"max_iter must be nonnegative, got {self.max_iter}", "max_iter")
        if self.L_override is not None and not self.L_override > 0:
            raise ConfigurationError("L_override must be positive", "L_override")
        fixed = _FIXED_STEP.get(self.algorithm)
        if fixed is not None and self.step is not fixed:
            raise ConfigurationError(
                f"{self.algorithm.value} requires {fixed.value}-loop steps", "step"
            )
        if self.algorithm in (Algorithm.HCGS, Algorithm.SMOOTHED_FW):
            if spec.mode is not Mode.NONSMOOTH_NORM:
                raise ConfigurationError(
                    f"{self.algorithm.value} requires p in [1,2) or inf", "algorithm"
                )
        elif spec.mode is not Mode.SMOOTH_SQUARED:
            raise ConfigurationError(
                f"{self.algorithm.value} requires p in [2,inf); use hcgs or smoothed-fw", "algorithm"
            )

    def resolved_inner_tolerance(self):
        if self.inner_tolerance is not None:
            return float(self.inner_tolerance)
        return min(1e-12, (self.epsilon / 10.0) ** 2)


@dataclass
class IterRecord:
    t: int
    f_value: float
    primal_gap: float
    cardinality: int
    gamma: float | None = None
    beta: float | None = None
    vertex_index: int | None = None
    elapsed_ms: float = 0.0
    kind: str | None = None


TRACE_FIELDS = ("t", "f_value", "primal_gap", "cardinality", "gamma", "beta", "vertex_index", "elapsed_ms")


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: Status = Status.ITER_CAP
    algorithm: str = ""
    step: str = ""
    p: float = 2.0
    epsilon: float = 0.0
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def f_values(self):
        return self.column("f_value")

    @property
    def cardinalities(self):
        return np.array([r.cardinality for r in self.records], dtype=int)

    @property
    def final(self):
        return self.records[-1]

    def first_reaching(self, threshold):
        """First record whose primal gap is at most ``threshold``, else None."""
        for r in self.records:
            if r.primal_gap <= threshold:
                return r
        return None


# ---------------------------------------------------------------------------
# step sizes


def step_open_loop(t):
    """``2 / (t + 2)``."""
    if t < 0:
        raise InputError(f"iteration index must be nonnegative, got {t}")
    return 2.0 / (t + 2.0)


def step_closed_loop(x, v, g, L, p=2.0):
    """Short step ``min(<x - v, g> / (L ||x - v||_p^2), 1)``.

    Raises DegenerateGradient when ``x == v`` or the Frank-Wolfe gap is not
    positive: the current point is already optimal.
    """
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    d = np.asarray(x, dtype=np.float64) - np.asarray(v, dtype=np.float64)
    gap = float(d @ np.asarray(g, dtype=np.float64))
    den = L * lp_norm(d, p) ** 2
    if den == 0.0 or gap <= 0.0:
        raise DegenerateGradient("Frank-Wolfe gap is zero")
    return min(gap / den, 1.0)


def _clipped_short_step(gap, d, L, p, gmax):
    den = L * lp_norm(d, p) ** 2
    if den == 0.0 or gap <= 0.0:
        return 0.0
    return min(gap / den, gmax)


# ---------------------------------------------------------------------------
# active-set bookkeeping


class _Support:
    """Weights over an atom table; atoms are vertex rows or registered ball points."""

    def __init__(self, cset):
        self.cset = cset
        if isinstance(cset, VertexSet):
            self.atoms = cset.vertices
            self.weights = np.zeros(cset.m)
            self._registry = None
        else:
            self.atoms = np.empty((0, cset.n))
            self.weights = np.zeros(0)
            self._registry = {}

    def register(self, point):
        """Index of ``point`` in the atom table, adding it if new (ball sets only)."""
        key = np.ascontiguousarray(point, dtype=np.float64).tobytes()
        idx = self._registry.get(key)
        if idx is None:
            idx = len(self._registry)
            self._registry[key] = idx
            if idx >= self.atoms.shape[0]:
                cap = max(16, 2 * self.atoms.shape[0])
                atoms = np.zeros((cap, self.cset.n))
                atoms[: self.atoms.shape[0]] = self.atoms
                weights = np.zeros(cap)
                weights[: self.weights.shape[0]] = self.weights
                self.atoms, self.weights = atoms, weights
            self.atoms[idx] = point
        return idx

    @property
    def active(self):
        return np.flatnonzero(self.weights > 0.0)

    @property
    def cardinality(self):
        return int(np.count_nonzero(self.weights > 0.0))

    def point(self):
        idx = self.active
        if 4 * idx.size >= self.weights.size:
            return self.weights @ self.atoms
        return self.weights[idx] @ self.atoms[idx]

    def set_single(self, j):
        self.weights[:] = 0.0
        self.weights[j] = 1.0

    def toward(self, j, gamma):
        if gamma >= 1.0:
            self.set_single(j)
            return
        self.weights *= 1.0 - gamma
        self.weights[j] += gamma

    def away(self, j, gamma, drop):
        self.weights *= 1.0 + gamma
        self.weights[j] -= gamma
        if drop:
            self.weights[j] = 0.0
        self.prune()

    def prune(self):
        w = self.weights
        small = (w > 0.0) & (w < PRUNE_TOL)
        if np.any(small) or np.any(w < 0.0):
            w[small | (w < 0.0)] = 0.0
            w /= w.sum()

    def combination(self):
        idx = self.active
        n_atoms = len(self._registry) if self._registry is not None else self.atoms.shape[0]
        return ConvexCombination(
            support=[(int(i), float(self.weights[i])) for i in idx],
            point=self.point(),
            atoms=self.atoms[:n_atoms].copy(),
        )


def _lmo(cset, g):
    """Returns ``(atom_index_or_None, point)``; ball points are registered by the caller."""
    if isinstance(cset, VertexSet):
        j = lmo_vertices(cset, g)
        return j, cset.vertices[j]
    return None, lmo_lq_ball(cset, g)


def _start(cset, support, seed):
    if isinstance(cset, VertexSet):
        support.set_single(0)
        return 0
    rng = np.random.Generator(np.random.Philox(seed))
    direction = rng.standard_normal(cset.n)
    j = support.register(lmo_lq_ball(cset, direction))
    support.set_single(j)
    return j


def _check_dims(cset, spec):
    if cset.n != spec.n:
        raise InputError(f"target has dimension {spec.n}, feasible set has dimension {cset.n}")


class _Recorder:
    def __init__(self, trace):
        self.trace = trace
        self.t0 = time.perf_counter()

    def add(self, t, f, gap, card, gamma=None, beta=None, vertex=None, kind=None):
        self.trace.records.append(
            IterRecord(
                t=t,
                f_value=float(f),
                primal_gap=float(gap),
                cardinality=int(card),
                gamma=None if gamma is None else float(gamma),
                beta=None if beta is None else float(beta),
                vertex_index=None if vertex is None else int(vertex),
                elapsed_ms=(time.perf_counter() - self.t0) * 1e3,
                kind=kind,
            )
        )


def _new_trace(config, spec, f_min):
    return RunTrace(
        algorithm=config.algorithm.value,
        step=config.step.value,
        p=spec.p,
        epsilon=config.epsilon,
        meta={"f_min": f_min, "seed": config.seed, "max_iter": int(config.max_iter)},
    )


def _stop_threshold(spec, epsilon):
    if spec.mode is Mode.SMOOTH_SQUARED:
        return 0.5 * epsilon ** 2
    return epsilon


# FW gaps below this fraction of f carry no information in double precision
_FLOAT_FLOOR = 1e-14


def _gap_stop(fw_gap, f, f_min, threshold):
    """Status implied by the FW gap, or None to keep iterating.

    The FW gap bounds the primal gap from above, so ``fw_gap <= threshold``
    certifies convergence whatever ``f_min`` is. This matters for targets
    outside the set, where ``f - f_min`` cannot resolve a tiny threshold.
    """
    if fw_gap <= 0.0:
        return Status.CONVERGED if f_min is None else Status.DEGENERATE
    if fw_gap <= threshold:
        return Status.CONVERGED
    if fw_gap <= _FLOAT_FLOOR * f:
        return Status.DEGENERATE
    return None


# ---------------------------------------------------------------------------
# FW, NEP-FW


def fw_solve(cset, spec, config, f_min=0.0, use_nep=False):
    """Frank-Wolfe on ``0.5 ||x - x*||_p^2`` with open- or closed-loop steps.

    ``f_min`` is the optimal value (0 when ``x*`` lies in the set). Pass
    ``f_min=None`` when it is unknown: the run then stops on the Frank-Wolfe
    duality gap instead of the primal gap, and the reported primal gap is
    measured against the best value seen.
    """
    config.validate(spec)
    _check_dims(cset, spec)
    if use_nep and not isinstance(cset, VertexSet):
        raise ConfigurationError("nep-fw needs an explicit vertex set", "algorithm")
    if use_nep and config.step is not Step.OPEN_LOOP:
        raise ConfigurationError("nep-fw requires open-loop steps", "step")
    L = config.L_override if config.L_override is not None else spec.p - 1.0
    threshold = _stop_threshold(spec, config.epsilon)
    support = _Support(cset)
    j = _start(cset, support, config.seed)
    x = support.point()
    trace = _new_trace(config, spec, f_min)
    rec = _Recorder(trace)
    best = math.inf
    max_iter = int(config.max_iter)
    for t in range(max_iter + 1):
        f = lp_sq_value(x, spec)
        best = min(best, f)
        gap = f - (best if f_min is None else f_min)
        if f_min is not None and gap <= threshold:
            trace.status = Status.CONVERGED
            rec.add(t, f, gap, support.cardinality)
            break
        if t == max_iter:
            rec.add(t, f, gap, support.cardinality)
            break
        g = lp_sq_gradient(x, spec)
        if use_nep:
            gamma = step_open_loop(t)
            j = nep_select(cset, g, x, L * gamma / 2.0)
            v = cset.vertices[j]
        else:
            j, v = _lmo(cset, g)
        fw_gap = float((x - v) @ g)
        stop = None if use_nep else _gap_stop(fw_gap, f, f_min, threshold)
        if use_nep and f_min is None and fw_gap <= threshold:
            stop = Status.CONVERGED
        if stop is not None:
            trace.status = stop
            rec.add(t, f, gap, support.cardinality)
            break
        if config.step is Step.OPEN_LOOP:
            gamma = step_open_loop(t)
        else:
            try:
                gamma = step_closed_loop(x, v, g, L, spec.p)
            except DegenerateGradient:
                trace.status = Status.DEGENERATE
                rec.add(t, f, gap, support.cardinality, gamma=0.0)
                break
        if j is None:
            j = support.register(v)
        rec.add(t, f, gap, support.cardinality, gamma=gamma, vertex=j, kind="fw")
        support.toward(j, gamma)
        support.prune()
        x = support.point()
    trace.meta["iterations"] = trace.final.t
    return support.combination(), trace


def nep_fw_solve(cset, spec, config, f_min=0.0):
    """FW with the nearest-extreme-point oracle, ``lambda_t = L gamma_t / 2``."""
    return fw_solve(cset, spec, config, f_min=f_min, use_nep=True)


# ---------------------------------------------------------------------------
# FCFW


@dataclass
class CorrectionResult:
    weights: np.ndarray
    fw_gap: float
    iterations: int
    warning: bool


def _affine_polish(A, target, w):
    """p = 2 only: least squares on ``{sum w = 1}`` over the support of ``w``.

    Returns ``(w_new, gap, at_floor)`` when the affine minimizer is strictly inside the
    face and no worse than ``w``, else None. This finishes ill-conditioned
    corrections that away-step FW approaches only linearly.
    """
    S = np.flatnonzero(w > 0)
    B = A[S]
    s = S.size
    kkt = np.zeros((s + 1, s + 1))
    kkt[:s, :s] = B @ B.T
    kkt[:s, s] = kkt[s, :s] = 1.0
    rhs = np.append(B @ target, 1.0)
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:s]
    if not np.all(sol > 0):
        return None
    cand = np.zeros_like(w)
    cand[S] = sol / sol.sum()
    y_old, y_new = w @ A - target, cand @ A - target
    if y_new @ y_new > y_old @ y_old:
        return None
    gw = A @ y_new
    gap = float(cand @ gw - gw.min())
    # an exact face minimizer still carries rounding of order eps * ||A||^2 in its gap
    floor = 64.0 * np.finfo(float).eps * A.shape[1] * float(np.max(np.abs(A))) ** 2
    return cand, gap, gap <= floor


def fcfw_correction(active, spec, tol, weights=None):
    """Minimize ``0.5 ||sum_i w_i a_i - x*||_p^2`` over the simplex on the active atoms.

    Runs away-step FW on the weights until the FW gap over the active set is at
    most ``tol``. Vertices whose weight reaches zero are dropped (their weight is
    exactly 0 in the result). ``warning`` is set when the inner cap
    ``10 k^2`` is hit before the tolerance; reaching the floating-point floor
    (no line-search progress) is not a warning. At p = 2 a capped run gets one
    affine least-squares polish on its support before the warning is decided.
    """
    A = np.ascontiguousarray(active, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] == 0:
        raise InputError("active set must be a nonempty (k, n) array")
    if not tol > 0:
        raise InputError("tol must be positive")
    k = A.shape[0]
    if weights is None:
        w = np.zeros(k)
        w[0] = 1.0
    else:
        w = np.array(weights, dtype=np.float64)
    cap = 10 * k * k
    w, gap, iters, status = kernels.simplex_correction(A, spec.target, float(spec.p), w, float(tol), cap)
    if status == kernels.ITER_CAP and spec.p == 2.0:
        polished = _affine_polish(A, spec.target, w)
        if polished is not None:
            w, gap, at_floor = polished
            if gap <= tol or at_floor:
                status = kernels.CONVERGED
    w[(w > 0) & (w < PRUNE_TOL)] = 0.0
    w /= w.sum()
    return CorrectionResult(w, float(gap), int(iters), status == kernels.ITER_CAP)


def fcfw_solve(cset, spec, config, f_min=0.0):
    """Fully-corrective FW: add the LMO vertex, then reoptimize over the active hull.

    The correction is warm-started at the plain FW step, so each iterate is at
    least as good as that step.
    """
    config.validate(spec)
    _check_dims(cset, spec)
    L = config.L_override if config.L_override is not None else spec.p - 1.0
    tol = config.resolved_inner_tolerance()
    threshold = _stop_threshold(spec, config.epsilon)
    support = _Support(cset)
    _start(cset, support, config.seed)
    x = support.point()
    trace = _new_trace(config, spec, f_min)
    trace.meta["inner_tolerance"] = tol
    rec = _Recorder(trace)
    inner_warnings = 0
    inner_iterations = 0
    best = math.inf
    max_iter = int(config.max_iter)
    for t in range(max_iter + 1):
        f = lp_sq_value(x, spec)
        best = min(best, f)
        gap = f - (best if f_min is None else f_min)
        if f_min is not None and gap <= threshold:
            trace.status = Status.CONVERGED
            rec.add(t, f, gap, support.cardinality)
            break
        if t == max_iter:
            rec.add(t, f, gap, support.cardinality)
            break
        g = lp_sq_gradient(x, spec)
        j, v = _lmo(cset, g)
        fw_gap = float((x - v) @ g)
        stop = _gap_stop(fw_gap, f, f_min, threshold)
        if stop is not None:
            trace.status = stop
            rec.add(t, f, gap, support.cardinality, gamma=0.0)
            break
        if config.step is Step.OPEN_LOOP:
            gamma = step_open_loop(t)
        else:
            gamma = step_closed_loop(x, v, g, L, spec.p)
        if j is None:
            j = support.register(v)
        rec.add(t, f, gap, support.cardinality, gamma=gamma, vertex=j, kind="fw+correct")
        # reoptimize over S_t plus the new vertex, even when the FW step zeroed old weights
        idx = np.union1d(support.active, [j])
        support.toward(j, gamma)
        res = fcfw_correction(support.atoms[idx], spec, tol, weights=support.weights[idx])
        inner_iterations += res.iterations
        if res.warning:
            inner_warnings += 1
        support.weights[idx] = res.weights
        x = support.point()
    if inner_warnings:
        warnings.warn(
            f"fcfw: inner correction hit its iteration cap {inner_warnings} time(s)",
            RuntimeWarning,
            stacklevel=2,
        )
    trace.meta.update(
        iterations=trace.final.t, inner_warnings=inner_warnings, inner_iterations=inner_iterations
    )
    return support.combination(), trace


# ---------------------------------------------------------------------------
# AFW


def afw_solve(cset, spec, config, f_min=0.0):
    """Away-step FW with short (closed-loop) steps in the lp norm.

    An away step moves from ``x`` in direction ``x - a`` where ``a`` is the
    active vertex with the largest gradient product; its step is capped at
    ``w_a / (1 - w_a)`` and a capped step drops ``a`` from the support.
    """
    config.validate(spec)
    _check_dims(cset, spec)
    if not isinstance(cset, VertexSet):
        raise ConfigurationError("afw needs an explicit vertex set", "algorithm")
    L = config.L_override if config.L_override is not None else spec.p - 1.0
    threshold = _stop_threshold(spec, config.epsilon)
    V = cset.vertices
    support = _Support(cset)
    _start(cset, support, config.seed)
    x = support.point()
    trace = _new_trace(config, spec, f_min)
    rec = _Recorder(trace)
    drops = 0
    best = math.inf
    max_iter = int(config.max_iter)
    for t in range(max_iter + 1):
        f = lp_sq_value(x, spec)
        best = min(best, f)
        gap = f - (best if f_min is None else f_min)
        if f_min is not None and gap <= threshold:
            trace.status = Status.CONVERGED
            rec.add(t, f, gap, support.cardinality)
            break
        if t == max_iter:
            rec.add(t, f, gap, support.cardinality)
            break
        g = lp_sq_gradient(x, spec)
        s = lmo_vertices(cset, g)
        scores = V @ g
        active = support.active
        a = int(active[np.argmax(scores[active])])
        xg = float(x @ g)
        fw_gap = xg - float(scores[s])
        away_gap = float(scores[a]) - xg
        stop = _gap_stop(fw_gap, f, f_min, threshold)
        if stop is not None:
            trace.status = stop
            rec.add(t, f, gap, support.cardinality, gamma=0.0)
            break
        if fw_gap >= away_gap or active.size == 1:
            gamma = _clipped_short_step(fw_gap, V[s] - x, L, spec.p, 1.0)
            rec.add(t, f, gap, support.cardinality, gamma=gamma, vertex=s, kind="fw")
            support.toward(s, gamma)
            support.prune()
        else:
            wa = support.weights[a]
            gmax = wa / (1.0 - wa)
            gamma = _clipped_short_step(away_gap, x - V[a], L, spec.p, gmax)
            drop = gamma >= gmax
            drops += int(drop)
            rec.add(t, f, gap, support.cardinality, gamma=gamma, vertex=a, kind="drop" if drop else "away")
            support.away(a, gamma, drop)
        x = support.point()
    trace.meta.update(iterations=trace.final.t, drop_steps=drops)
    return support.combination(), trace


# ---------------------------------------------------------------------------
# nonsmooth norms: HCGS and FW on a fixed Moreau envelope


def _smoothing_constants(cset, spec):
    D_2 = diameter(cset, 2.0)
    G_2 = l2_lipschitz_constant(cset.n, spec.p)
    return D_2, G_2


def _smoothed_loop(cset, spec, config, schedule, n_iter, f_min):
    threshold = _stop_threshold(spec, config.epsilon)
    support = _Support(cset)
    _start(cset, support, config.seed)
    x = support.point()
    trace = _new_trace(config, spec, f_min)
    rec = _Recorder(trace)
    best = math.inf
    for t in range(n_iter + 1):
        f = lp_value(x, spec)
        best = min(best, f)
        gap = f - (best if f_min is None else f_min)
        if f_min is not None and gap <= threshold:
            trace.status = Status.CONVERGED
            rec.add(t, f, gap, support.cardinality)
            break
        if t == n_iter:
            rec.add(t, f, gap, support.cardinality)
            break
        beta = schedule.beta(t)
        g = moreau_gradient(x, beta, spec)
        try:
            j, v = _lmo(cset, g)
        except DegenerateGradient:
            trace.status = Status.DEGENERATE
            rec.add(t, f, gap, support.cardinality, beta=beta)
            break
        gamma = step_open_loop(t)
        if j is None:
            j = support.register(v)
        rec.add(t, f, gap, support.cardinality, gamma=gamma, beta=beta, vertex=j, kind="fw")
        support.toward(j, gamma)
        support.prune()
        x = support.point()
    return support, trace


def hcgs_solve(cset, spec, config, f_min=0.0):
    """Hybrid conditional gradient-smoothing on ``||x - x*||_p``.

    Uses ``grad f_{beta_t}(x_t)`` with ``beta_t = 2 (D_2/G_2) / sqrt(t+2)`` in the
    linear oracle and open-loop steps; stops once ``||x_t - x*||_p - f_min <= epsilon``.
    """
    config.validate(spec)
    _check_dims(cset, spec)
    D_2, G_2 = _smoothing_constants(cset, spec)
    schedule = DecayingBeta(D_2=D_2, G_2=G_2)
    support, trace = _smoothed_loop(cset, spec, config, schedule, int(config.max_iter), f_min)
    trace.meta.update(iterations=trace.final.t, D_2=D_2, G_2=G_2)
    return support.combination(), trace


def smoothed_fw_budget(G_2, D_2, epsilon):
    """Iteration budget ``floor(4 G_2^2 D_2^2 / epsilon^2)``."""
    return int(math.floor(4.0 * G_2 ** 2 * D_2 ** 2 / epsilon ** 2))


def smoothed_fw_solve(cset, spec, config, f_min=0.0):
    """Open-loop FW on the fixed envelope ``f_beta`` with ``beta = epsilon / G_2^2``.

    After ``floor(4 G_2^2 D_2^2 / epsilon^2)`` iterations the lp error is within
    ``epsilon`` of its minimum; the run stops earlier when the primal gap is
    observable and already below ``epsilon``.
    """
    config.validate(spec)
    _check_dims(cset, spec)
    D_2, G_2 = _smoothing_constants(cset, spec)
    schedule = FixedBeta(epsilon=config.epsilon, G_2=G_2)
    budget = smoothed_fw_budget(G_2, D_2, config.epsilon)
    n_iter = min(budget, int(config.max_iter))
    support, trace = _smoothed_loop(cset, spec, config, schedule, n_iter, f_min)
    if trace.status is Status.ITER_CAP and trace.final.t >= budget:
        # budget exhausted: the accuracy guarantee applies
        trace.status = Status.CONVERGED
    trace.meta.update(iterations=trace.final.t, D_2=D_2, G_2=G_2, budget=budget, beta=schedule.beta(0))
    return support.combination(), trace


# ---------------------------------------------------------------------------
# dispatch and projection mode

SOLVERS = {
    Algorithm.FW: fw_solve,
    Algorithm.NEP_FW: nep_fw_solve,
    Algorithm.FCFW: fcfw_solve,
    Algorithm.AFW: afw_solve,
    Algorithm.HCGS: hcgs_solve,
    Algorithm.SMOOTHED_FW: smoothed_fw_solve,
}


def solve(cset, spec, config, f_min=0.0):
    """Run the solver named by ``config.algorithm``."""
    return SOLVERS[Algorithm(config.algorithm)](cset, spec, config, f_min=f_min)


@dataclass
class ProjectionReport:
    distance: float | None
    source: str
    final_gap: float
    projection_l2: np.ndarray | None = None
    distance_to_projection_l2: float | None = None


def _reference_projection(cset, spec):
    """``(dist_p, proj_2 or None, source)`` when an exact reference is available."""
    if isinstance(cset, LqBall):
        if cset.q == 2.0 and spec.p == 2.0:
            d = spec.target - cset.center
            r = float(np.linalg.norm(d))
            if r <= cset.radius:
                return 0.0, spec.target.copy(), "analytic"
            return r - cset.radius, cset.center + cset.radius * d / r, "analytic"
        return None, None, "running-best"
    from caradory.instances import exact_small_oracle

    oracle = exact_small_oracle(cset, spec.target, spec.p, cardinality=False)
    proj = oracle.point if spec.p == 2.0 else None
    return oracle.distance, proj, "oracle"


def projection_solve(cset, spec, config, reference=True):
    """Sparse approximate lp projection of a target that may lie outside the set.

    The primal gap is measured against ``dist_p(x*, C)`` (squared and halved in
    smooth mode) when an exact reference is available, otherwise against the
    best value seen. For p = 2 the report also gives ``||x - proj_2(x*, C)||_2``.
    """
    dist, proj, source = _reference_projection(cset, spec) if reference else (None, None, "running-best")
    if dist is None:
        f_min = None
    elif spec.mode is Mode.SMOOTH_SQUARED:
        f_min = 0.5 * dist ** 2
    else:
        f_min = dist
    combo, trace = solve(cset, spec, config, f_min=f_min)
    report = ProjectionReport(distance=dist, source=source, final_gap=trace.final.primal_gap)
    if proj is not None:
        report.projection_l2 = proj
        report.distance_to_projection_l2 = float(np.linalg.norm(combo.point - proj))
    trace.meta["projection"] = {"distance": dist, "source": source}
    return combo, trace, report
