"""Metrics on state spaces of finite order-unit spaces from Lipschitz seminorms.

Finite commutative algebras (functions on a labelled point set) and full
matrix algebras, with seminorms from skew-adjoint commutators, graph cost
functions, electrical resistance, quotient norms, and metric tables; the
induced Monge-Kantorovich-style metrics on states; seminorm recovery from
those metrics; and checkers for the lattice, Leibniz, and metric-axiom
properties that separate the families.
"""

from .engine import (
    CertifiedValue,
    MetricEngine,
    NoConvergenceError,
    dual_norm,
    metric_table,
    monge_kantorovich,
    radius,
    state_metric,
    trace_distance,
)
from .linalg import (
    HermMatrix,
    LinearProgram,
    LpOutcome,
    LpStatus,
    SolverFailure,
    SymMatrix,
    eigh,
    laplacian_solve,
    op_norm,
    solve_lp,
    trace_norm,
)
from .recovery import (
    RecoveryReport,
    compare,
    extreme_seminorm,
    sampled_recovered_seminorm,
)
from .resistance import (
    ConductanceGraph,
    EdgeFlow,
    divergence,
    effective_resistance,
    flow_seminorm,
    gradient,
    laplacian,
    resistance_metric,
    spanning_tree_resistance,
)
from .seminorms import (
    POLYHEDRAL_UNAVAILABLE,
    CostGraph,
    Cut,
    DegenerateSeminormError,
    DiracOperator,
    DiracSpec,
    GraphLipSpec,
    MetricLipSpec,
    QuotientSpec,
    ResistanceSpec,
    SeminormSpec,
    dirac_from_cost,
    evaluate,
    lattice_join,
    separation_oracle,
    unit_ball_constraints,
)
from .spaces import (
    CommObservable,
    DensityState,
    FiniteSpace,
    MatObservable,
    MetricTable,
    ProbState,
    TracelessMatrix,
    ZeroSumVector,
    difference,
    pair,
    point_state,
    quotient_norm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
