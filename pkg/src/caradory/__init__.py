"""Sparse approximate convex decompositions and lp projections with Frank-Wolfe methods."""
from caradory.errors import (
    CaradoryError,
    ConfigurationError,
    DegenerateGradient,
    InputError,
    InvariantViolation,
    NumericalError,
    UnsupportedSize,
)
from caradory.geometry import (
    ConvexCombination,
    LqBall,
    VertexSet,
    diameter,
    l2_lipschitz_constant,
    lmo_lq_ball,
    lmo_vertices,
    load_vertex_set,
    lp_norm,
    nep_select,
)
from caradory.objectives import (
    Mode,
    ObjectiveSpec,
    lp_sq_gradient,
    lp_sq_value,
    lp_value,
    moreau_gradient,
    moreau_value,
    prox_lp,
)
from caradory.solvers import (
    Algorithm,
    RunTrace,
    SolverConfig,
    Status,
    Step,
    projection_solve,
    solve,
)
from caradory.bounds import TheoryBounds, evaluate_bound
from caradory.instances import (
    exact_small_oracle,
    gen_random_polytope,
    hadamard,
    hadamard_instance,
    lower_bound_cardinality,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
