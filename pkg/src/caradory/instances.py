"""Instance generators, the Hadamard lower bound, and a brute-force ground-truth oracle.

Randomness comes from numpy's Philox 4x64 counter-based bit generator keyed by
the seed; only its uniform doubles are used. Gaussians are drawn with the
Box-Muller transform and Dirichlet(1) weights as normalized exponentials, so a
(params, seed) pair yields the same instance on every platform.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog, minimize

from caradory import kernels
from caradory.errors import InputError, UnsupportedSize
from caradory.geometry import LqBall, VertexSet, lp_norm
from caradory.objectives import ObjectiveSpec, parse_exponent

MEMBERSHIP_TOL = 1e-9
ORACLE_GAP_TOL = 1e-12
ORACLE_MAX_VERTICES = 12


class SeededStream:
    """Uniform, Gaussian and exponential draws from Philox keyed by ``seed``."""

    def __init__(self, seed):
        self._gen = np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))

    def uniform(self, size):
        # (0, 1]: keeps log() finite
        return 1.0 - self._gen.random(size)

    def normal(self, size):
        count = int(np.prod(size))
        half = (count + 1) // 2
        u1 = self.uniform(half)
        u2 = self.uniform(half)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
        return z[:count].reshape(size)

    def exponential(self, size):
        return -np.log(self.uniform(size))

    def dirichlet_ones(self, k):
        e = self.exponential(k)
        return e / e.sum()

    def subset(self, m, k):
        """Uniformly random sorted ``k``-subset of ``range(m)``."""
        keys = self.uniform(m)
        return np.sort(np.argsort(keys, kind="stable")[:k])


@dataclass
class InstanceDescriptor:
    kind: str
    params: dict
    feasible_set: object
    objective: ObjectiveSpec
    ground_truth_cardinality: int | None = None
    ground_truth_weights: np.ndarray | None = field(default=None, repr=False)
    target_inside: bool = True
    known_distance: float | None = None

    def to_json(self):
        cset = self.feasible_set
        doc = {
            "kind": self.kind,
            "params": self.params,
            "target": self.objective.target.tolist(),
            "p": _exponent_json(self.objective.p),
            "ground_truth_cardinality": self.ground_truth_cardinality,
        }
        if isinstance(cset, VertexSet):
            doc["vertices"] = cset.vertices.tolist()
        else:
            doc["ball"] = {"center": cset.center.tolist(), "radius": cset.radius, "q": cset.q}
        return doc


def _exponent_json(p):
    return "inf" if math.isinf(p) else p


def save_instance(desc, path):
    Path(path).write_text(json.dumps(desc.to_json()))


def load_instance(path):
    """Read an instance JSON file; errors name the file and the offending field."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return instance_from_json(doc)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def instance_from_json(doc):
    if not isinstance(doc, dict):
        raise InputError("instance document must be a JSON object")
    for key in ("target", "p"):
        if key not in doc:
            raise InputError(f"instance is missing field '{key}'")
    target = doc["target"]
    if not isinstance(target, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in target
    ):
        raise InputError("field 'target' must be a list of numbers")
    if "vertices" in doc:
        rows = doc["vertices"]
        n = len(target)
        cset = VertexSet.from_json({"n": n, "vertices": rows})
    elif "ball" in doc:
        b = doc["ball"]
        try:
            cset = LqBall(np.array(b["center"], dtype=float), float(b["radius"]), float(b.get("q", 2.0)))
        except (KeyError, TypeError) as exc:
            raise InputError(f"field 'ball' is malformed ({exc})") from exc
    else:
        raise InputError("instance needs either 'vertices' or 'ball'")
    spec = ObjectiveSpec(np.array(target, dtype=float), parse_exponent(doc["p"]))
    if spec.n != cset.n:
        raise InputError(f"field 'target' has dimension {spec.n}, vertices have dimension {cset.n}")
    gt = doc.get("ground_truth_cardinality")
    if gt is not None and (not isinstance(gt, int) or isinstance(gt, bool)):
        raise InputError("field 'ground_truth_cardinality' must be an integer or null")
    return InstanceDescriptor(
        kind=str(doc.get("kind", "file")),
        params=doc.get("params", {}) or {},
        feasible_set=cset,
        objective=spec,
        ground_truth_cardinality=gt,
    )


# ---------------------------------------------------------------------------
# generators


def gen_random_polytope(n, m, k, seed, p=2.0):
    """``m`` Gaussian vertices in ``R^n`` and a Dirichlet(1) target on a random ``k``-subset."""
    if n < 1 or m < 1:
        raise InputError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if not 1 <= k <= m:
        raise InputError(f"need 1 <= k <= m, got k={k}, m={m}")
    stream = SeededStream(seed)
    V = stream.normal((m, n))
    subset = stream.subset(m, k)
    w = np.zeros(m)
    w[subset] = stream.dirichlet_ones(k)
    target = w[subset] @ V[subset]
    return InstanceDescriptor(
        kind="random",
        params={"n": n, "m": m, "k": k, "seed": seed},
        feasible_set=VertexSet(V),
        objective=ObjectiveSpec(target, p),
        ground_truth_cardinality=int(k),
        ground_truth_weights=w,
    )


def _check_power_of_two(n):
    if not isinstance(n, (int, np.integer)) or n < 1 or n & (n - 1):
        raise InputError(f"Hadamard order must be a power of two, got {n}")


def hadamard(n):
    """Sylvester Hadamard matrix ``H_n`` (integer entries +-1)."""
    _check_power_of_two(n)
    H = np.ones((1, 1), dtype=np.int64)
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H


def hadamard_instance(n, p):
    """Columns of ``H_n / n^{1/p}`` as vertices, target ``e_1 / n^{1/p}``."""
    p = parse_exponent(p)
    if not 2.0 <= p < math.inf:
        raise InputError(f"Hadamard instances are defined for p in [2, inf), got {p}")
    H = hadamard(n)
    scale = float(n) ** (-1.0 / p)
    V = np.ascontiguousarray(H.T, dtype=np.float64) * scale
    target = np.zeros(n)
    target[0] = scale
    return InstanceDescriptor(
        kind="hadamard",
        params={"n": int(n), "p": _exponent_json(p)},
        feasible_set=VertexSet(V),
        objective=ObjectiveSpec(target, p),
        ground_truth_cardinality=int(n),
        ground_truth_weights=np.full(n, 1.0 / n),
    )


def ball_instance(n, q=2.0, radius=1.0, offset=2.0, p=2.0):
    """lq ball at the origin with target ``offset * e_1`` (outside when ``offset > radius``)."""
    target = np.zeros(n)
    target[0] = offset
    ball = LqBall(np.zeros(n), radius, q)
    inside = lp_norm(target, q) <= radius
    p = parse_exponent(p)
    dist = None
    if q == 2.0 and p == 2.0:
        dist = max(0.0, abs(offset) - radius)
    return InstanceDescriptor(
        kind="ball",
        params={"n": n, "q": q, "radius": radius, "offset": offset},
        feasible_set=ball,
        objective=ObjectiveSpec(target, p),
        target_inside=inside,
        known_distance=dist,
    )


def regular_simplex_instance(n, p=2.0):
    """Regular simplex ``conv{e_1, ..., e_n}`` in ``R^n`` with its barycenter as target.

    The largest affine l2 ball around the barycenter inside the simplex has
    radius ``1 / sqrt(n (n - 1))``.
    """
    V = np.eye(n)
    target = np.full(n, 1.0 / n)
    return InstanceDescriptor(
        kind="simplex",
        params={"n": n},
        feasible_set=VertexSet(V),
        objective=ObjectiveSpec(target, p),
        ground_truth_cardinality=n,
        ground_truth_weights=np.full(n, 1.0 / n),
    )


# ---------------------------------------------------------------------------
# lower bound


def lower_bound_cardinality(n, epsilon):
    """Minimum cardinality ``1 / (eps^2 + 1/n)`` of any eps-approximation on the Hadamard instance."""
    _check_power_of_two(n)
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    return 1.0 / (epsilon ** 2 + 1.0 / n)


@dataclass(frozen=True)
class LowerBoundCurve:
    n: int

    def epsilon(self, s):
        """Accuracy ``sqrt(1/s - 1/n)`` at which cardinality ``s`` becomes admissible."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 1) or np.any(s > self.n):
            raise InputError(f"s must lie in [1, {self.n}]")
        return np.sqrt(np.maximum(1.0 / s - 1.0 / self.n, 0.0))

    def points(self):
        s = np.arange(1, self.n + 1)
        return s, self.epsilon(s)


# ---------------------------------------------------------------------------
# exact oracle


@dataclass
class OracleResult:
    distance: float
    point: np.ndarray
    weights: np.ndarray
    certificate_gap: float | None
    min_cardinality: int | None = None
    min_support: tuple | None = None


def _distance_smooth(V, target, p):
    m = V.shape[0]
    best_val, best_w = math.inf, None
    # several starts: the correction is exact but a poor start can stall at the float floor
    starts = [np.eye(m)[i] for i in range(min(m, 4))] + [np.full(m, 1.0 / m)]
    for w0 in starts:
        w, gap, _, _ = kernels.simplex_correction(V, target, float(p), w0.copy(), ORACLE_GAP_TOL, 200_000)
        val = lp_norm(w @ V - target, p)
        if val < best_val:
            best_val, best_w, best_gap = val, w, gap
    return best_val, best_w, best_gap


def _distance_lp(V, target, p):
    """Exact distance for p in {1, inf} by linear programming over (w, t)."""
    m, n = V.shape
    # variables: w (m), then slack(s)
    if p == 1.0:
        # min sum s  s.t. -s <= V^T w - x* <= s, sum w = 1, w >= 0
        c = np.concatenate([np.zeros(m), np.ones(n)])
        A_ub = np.block([[V.T, -np.eye(n)], [-V.T, -np.eye(n)]])
        b_ub = np.concatenate([target, -target])
        bounds = [(0, None)] * m + [(0, None)] * n
        A_eq = np.concatenate([np.ones(m), np.zeros(n)])[None, :]
    else:
        c = np.concatenate([np.zeros(m), [1.0]])
        A_ub = np.block([[V.T, -np.ones((n, 1))], [-V.T, -np.ones((n, 1))]])
        b_ub = np.concatenate([target, -target])
        bounds = [(0, None)] * (m + 1)
        A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if not res.success:
        raise InputError(f"distance LP failed: {res.message}")
    w = np.maximum(res.x[:m], 0.0)
    w /= w.sum()
    return lp_norm(w @ V - target, p), w


def _distance_general(V, target, p):
    """p in (1, 2): minimize ||V^T w - x*||_p^p over the simplex with SLSQP."""
    m = V.shape[0]
    best = None
    for w0 in [np.full(m, 1.0 / m)] + [np.eye(m)[i] for i in range(m)]:
        res = minimize(
            lambda w: float(np.sum(np.abs(w @ V - target) ** p)),
            w0,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * m,
            constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0}],
            options={"ftol": 1e-15, "maxiter": 1000},
        )
        w = np.maximum(res.x, 0.0)
        w /= w.sum()
        val = lp_norm(w @ V - target, p)
        if best is None or val < best[0]:
            best = (val, w)
    return best


def _in_hull(V_sub, target):
    """Affine barycentric solve on an affinely independent subset; True if inside."""
    k = V_sub.shape[0]
    M = np.vstack([V_sub.T, np.ones((1, k))])
    rhs = np.concatenate([target, [1.0]])
    w, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.any(w < -MEMBERSHIP_TOL):
        return False, None
    w = np.maximum(w, 0.0)
    w /= w.sum()
    resid = float(np.linalg.norm(w @ V_sub - target))
    return resid <= MEMBERSHIP_TOL, w


def minimal_cardinality(vs, target):
    """Smallest ``s`` such that ``target`` lies in the hull of some ``s`` vertices.

    Subsets are scanned in increasing size. A minimal subset is affinely
    independent, so its barycentric coordinates are the unique affine solution;
    the residual test uses tolerance 1e-9.
    """
    V = vs.vertices
    m, n = V.shape
    if m > ORACLE_MAX_VERTICES:
        raise UnsupportedSize(f"minimal-cardinality search supports m <= {ORACLE_MAX_VERTICES}, got {m}")
    target = np.asarray(target, dtype=float)
    for s in range(1, min(m, n + 1) + 1):
        for subset in itertools.combinations(range(m), s):
            ok, _ = _in_hull(V[list(subset)], target)
            if ok:
                return s, subset
    return None, None


def exact_small_oracle(vs, target, p, cardinality=True):
    """Distance from ``target`` to ``conv(V)`` in the lp norm, plus minimal cardinality.

    p in [2, inf): away-step FW on the weights to FW gap 1e-12 (the gap bounds
    the suboptimality of the squared objective). p in {1, inf}: exact LP.
    p in (1, 2): SLSQP with restarts. The minimal-cardinality search runs only
    when requested and needs ``m <= 12``.
    """
    p = parse_exponent(p)
    V = vs.vertices
    target = np.ascontiguousarray(target, dtype=float)
    if target.shape[0] != vs.n:
        raise InputError(f"target has dimension {target.shape[0]}, vertex set has dimension {vs.n}")
    gap = None
    if 2.0 <= p < math.inf:
        dist, w, gap = _distance_smooth(V, target, p)
    elif p == 1.0 or math.isinf(p):
        dist, w = _distance_lp(V, target, p)
    else:
        dist, w = _distance_general(V, target, p)
    result = OracleResult(distance=float(dist), point=w @ V, weights=w, certificate_gap=gap)
    if cardinality:
        if vs.m > ORACLE_MAX_VERTICES:
            raise UnsupportedSize(
                f"minimal-cardinality search supports m <= {ORACLE_MAX_VERTICES}, got {vs.m}"
            )
        s, subset = minimal_cardinality(vs, target)
        result.min_cardinality = s
        result.min_support = subset
    return result
