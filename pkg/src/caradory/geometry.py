"""Feasible sets, linear minimization oracles, diameters and convex combinations."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from caradory import kernels
from caradory.errors import DegenerateGradient, InputError, InvariantViolation

WEIGHT_SUM_TOL = 1e-9
PRUNE_TOL = 1e-12
EXACT_DIAMETER_MAX_VERTICES = 5000


def _as_vector(x, name="vector"):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def lp_norm(d, p):
    """``||d||_p`` computed after factoring out ``max|d_i|`` (safe for large p)."""
    a = np.abs(np.asarray(d, dtype=np.float64))
    if a.size == 0:
        return 0.0
    scale = float(a.max())
    if scale == 0.0 or math.isinf(p):
        return scale
    if p == 2.0:
        return float(np.sqrt(a @ a))
    if p == 1.0:
        return float(a.sum())
    return scale * float(np.sum((a / scale) ** p)) ** (1.0 / p)


@dataclass(frozen=True)
class VertexSet:
    """Polytope given by an explicit, ordered list of ``m`` vertices in ``R^n``."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.ascontiguousarray(self.vertices, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise InputError(f"vertices must be an (m, n) array with m, n >= 1, got shape {V.shape}")
        if not np.all(np.isfinite(V)):
            raise InputError("vertices must be finite")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def m(self):
        return self.vertices.shape[0]

    @property
    def n(self):
        return self.vertices.shape[1]

    def to_json(self):
        return {"n": self.n, "vertices": self.vertices.tolist()}

    @classmethod
    def from_json(cls, data):
        """Build from the ``{"n": int, "vertices": [[...], ...]}`` document."""
        if not isinstance(data, dict):
            raise InputError("vertex set document must be a JSON object")
        for key in ("n", "vertices"):
            if key not in data:
                raise InputError(f"vertex set document is missing field '{key}'")
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise InputError(f"field 'n' must be a positive integer, got {n!r}")
        rows = data["vertices"]
        if not isinstance(rows, list) or not rows:
            raise InputError("field 'vertices' must be a non-empty list of rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                got = len(row) if isinstance(row, list) else type(row).__name__
                raise InputError(f"vertices[{i}]: expected {n} coordinates, got {got}")
            for j, value in enumerate(row):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise InputError(f"vertices[{i}][{j}]: expected a number, got {value!r}")
        return cls(np.array(rows, dtype=np.float64))


@dataclass(frozen=True)
class LqBall:
    """``{v : ||v - center||_q <= radius}`` with ``q`` in ``[2, inf)``."""

    center: np.ndarray
    radius: float
    q: float = 2.0

    def __post_init__(self):
        c = _as_vector(self.center, "center")
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise InvariantViolation(f"radius must be positive and finite, got {self.radius}")
        if not (2.0 <= self.q < math.inf):
            raise InputError(f"LqBall supports q in [2, inf), got {self.q}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "q", float(self.q))

    @property
    def n(self):
        return self.center.shape[0]


def load_vertex_set(path):
    """Read a vertex-set JSON file; errors carry the file name and offending field."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return VertexSet.from_json(data)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _check_dim(vs, vec, name):
    if vec.shape[0] != vs.n:
        raise InputError(f"{name} has dimension {vec.shape[0]}, vertex set has dimension {vs.n}")


def lmo_vertices(vs, g):
    """Index of the vertex minimizing ``<v, g>``; ties go to the smallest index."""
    g = _as_vector(g, "g")
    _check_dim(vs, g, "g")
    return kernels.argmin_dot(vs.vertices, g)


def lmo_lq_ball(ball, g):
    """Minimizer of ``<v, g>`` over an lq ball (closed form via the dual exponent)."""
    g = _as_vector(g, "g")
    if g.shape[0] != ball.n:
        raise InputError(f"g has dimension {g.shape[0]}, ball has dimension {ball.n}")
    scale = float(np.max(np.abs(g)))
    if scale == 0.0:
        raise DegenerateGradient("zero direction passed to the lq-ball oracle")
    z = g / scale
    if ball.q == 2.0:
        direction = z / np.sqrt(z @ z)
    else:
        s = ball.q / (ball.q - 1.0)
        mag = np.abs(z) ** (s - 1.0)
        direction = np.sign(z) * mag / lp_norm(z, s) ** (s - 1.0)
    return ball.center - ball.radius * direction


def nep_select(vs, g, x, lam):
    """Nearest-extreme-point oracle: argmin of ``<v, g> + lam ||v - x||_2^2`` over vertices."""
    g = _as_vector(g, "g")
    x = _as_vector(x, "x")
    _check_dim(vs, g, "g")
    _check_dim(vs, x, "x")
    if lam < 0:
        raise InputError(f"lambda must be nonnegative, got {lam}")
    if lam == 0:
        return kernels.argmin_dot(vs.vertices, g)
    return kernels.nep_argmin(vs.vertices, g, x, float(lam))


def diameter(cset, p, method="auto"):
    """Diameter of the set in the lp norm.

    For a vertex set ``method="exact"`` scans all pairs. ``method="bound"`` returns
    ``2 max_j ||v_j - v_0||_p``, an upper bound within a factor 2 of the truth;
    ``"auto"`` uses the exact scan up to 5000 vertices.
    """
    p = float(p)
    if isinstance(cset, LqBall):
        expo = max(0.0, (0.0 if math.isinf(p) else 1.0 / p) - 1.0 / cset.q)
        return 2.0 * cset.radius * cset.n ** expo
    if method == "auto":
        method = "exact" if cset.m <= EXACT_DIAMETER_MAX_VERTICES else "bound"
    if cset.m == 1:
        return 0.0
    if method == "exact":
        return float(kernels.max_pairwise_distance(cset.vertices, p))
    if method == "bound":
        V = cset.vertices
        return 2.0 * max(lp_norm(V[j] - V[0], p) for j in range(1, cset.m))
    raise InputError(f"unknown diameter method {method!r}")


def combination_point(vs, weights):
    """Weighted sum of the vertices; weights must lie on the simplex."""
    w = _as_vector(weights, "weights")
    if w.shape[0] != vs.m:
        raise InputError(f"expected {vs.m} weights, got {w.shape[0]}")
    if np.any(w < 0):
        raise InvariantViolation("weights must be nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise InvariantViolation(f"weights sum to {w.sum()!r}, expected 1")
    return w @ vs.vertices


def l2_lipschitz_constant(n, p):
    """Lipschitz constant of ``||. - x*||_p`` in the l2 norm (p in [1, 2) or inf)."""
    if math.isinf(p):
        return 1.0
    if 1.0 <= p < 2.0:
        return float(n) ** (1.0 / p - 0.5)
    raise InputError(f"l2 Lipschitz constant defined here for p in [1, 2) or inf, got {p}")


@dataclass(frozen=True)
class DerivedConstants:
    D_p: float
    D_2: float
    L: float | None
    G_2: float | None


def derived_constants(cset, p):
    """Diameters, smoothness constant and l2 Lipschitz constant for exponent ``p``."""
    p = float(p)
    D_p = diameter(cset, p)
    D_2 = diameter(cset, 2.0)
    L = p - 1.0 if 2.0 <= p < math.inf else None
    G_2 = None if L is not None else l2_lipschitz_constant(cset.n, p)
    return DerivedConstants(D_p=D_p, D_2=D_2, L=L, G_2=G_2)


@dataclass
class ConvexCombination:
    """Sparse convex decomposition: ``point = sum_i weight_i * atom(index_i)``.

    ``atoms`` holds the rows the indices refer to: the vertex matrix for a vertex
    set, or the registry of selected boundary points for an lq ball.
    """

    support: list
    point: np.ndarray
    atoms: np.ndarray = field(repr=False, default=None)

    @property
    def cardinality(self):
        return len(self.support)

    @property
    def indices(self):
        return [i for i, _ in self.support]

    @property
    def weights(self):
        return np.array([w for _, w in self.support])

    def dense_weights(self, m):
        out = np.zeros(m)
        for i, w in self.support:
            out[i] = w
        return out

    def check(self, atoms=None):
        """Raise InvariantViolation unless weights are valid and the point reconstructs."""
        atoms = self.atoms if atoms is None else atoms
        w = self.weights
        if np.any(w <= 0):
            raise InvariantViolation("support weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InvariantViolation(f"support weights sum to {w.sum()!r}")
        if atoms is not None:
            recon = w @ atoms[self.indices]
            tol = WEIGHT_SUM_TOL * (1.0 + float(np.linalg.norm(self.point)))
            if np.max(np.abs(recon - self.point)) > tol:
                raise InvariantViolation("point does not match the weighted sum of its vertices")
        return True

    def to_json(self):
        return {
            "support": [[int(i), float(w)] for i, w in self.support],
            "point": self.point.tolist(),
            "cardinality": self.cardinality,
        }
