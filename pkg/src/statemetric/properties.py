"""Predicate suites for seminorm inequalities and metric axioms.

Lattice, weak-lattice (clipping), and Leibniz checks for seminorm specs;
metric-axiom validation for distance functions; and the four axioms that
characterize state-space metrics induced by a norm on zero-sum functionals
(convexity, midpoint balance, midpoint concavity, linearity), together with
the norm reconstruction whose well-definedness those axioms guarantee.

Checkers are falsifiers: they evaluate predicates on canonical and seeded
random configurations and report replayable violations.  Infeasible sampled
configurations (constructions leaving the state space) are rejected, not
projected, and the feasible count is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import DEFAULT_TOL, MetricEngine
from .linalg import HermMatrix, herm_abs, op_norm
from .seminorms import (
    QuotientSpec,
    SeminormSpec,
    evaluate,
    lattice_join,
    spec_flavor,
    spec_matrix_dim,
    spec_space,
)
from .spaces import (
    CommObservable,
    DensityState,
    FiniteSpace,
    MatObservable,
    Observable,
    ProbState,
    State,
    TracelessMatrix,
    ZeroSumVector,
    difference,
    mix,
    random_density,
    random_state,
    try_shift,
)

PREDICATE_TOL = 1e-9

StateSampler = Callable[[np.random.Generator], State]
MetricFunction = Callable[[State, State], float]


@dataclass(frozen=True)
class Violation:
    """One failed predicate instance; inputs suffice to replay it."""

    inputs: tuple
    lhs: float
    rhs: float
    margin: float


@dataclass
class CheckReport:
    name: str
    trials: int
    executed: int
    violations: list[Violation] = field(default_factory=list)
    note: str = ""
    _recompute: Callable[[tuple], tuple[float, float]] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def passed(self) -> bool:
        return not self.violations

    def replay(self, violation: Violation) -> float:
        """Re-evaluate a recorded violation; returns the recomputed margin."""
        if self._recompute is None:
            raise ValueError("report does not carry a replay closure")
        lhs, rhs = self._recompute(violation.inputs)
        return lhs - rhs


def _run_predicate(
    name: str,
    configurations,
    predicate: Callable[[tuple], tuple[float, float]],
    trials: int,
    tol: float,
    note: str = "",
) -> CheckReport:
    """Evaluate lhs <= rhs + tol over configurations; collect violations."""
    executed = 0
    violations = []
    for inputs in configurations:
        executed += 1
        lhs, rhs = predicate(inputs)
        if lhs - rhs > tol:
            violations.append(Violation(inputs, lhs, rhs, lhs - rhs))
    return CheckReport(name, trials, executed, violations, note, predicate)


def metric_function(spec: SeminormSpec, tol: float = DEFAULT_TOL) -> MetricFunction:
    """The spec's state metric as a plain callable, sharing one engine."""
    engine = MetricEngine(spec)
    return lambda mu, nu: engine.state_metric(mu, nu, tol).value


def simplex_sampler(space: FiniteSpace) -> StateSampler:
    return lambda rng: random_state(space, rng)


def density_sampler(n: int) -> StateSampler:
    return lambda rng: random_density(n, rng)


def _random_observable(spec: SeminormSpec, rng: np.random.Generator) -> Observable:
    if spec_flavor(spec) == "commutative":
        space = spec_space(spec)
        return CommObservable(space, rng.normal(size=space.n))
    n = spec_matrix_dim(spec)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return MatObservable(HermMatrix.from_complex((a + a.conj().T) / 2.0))


def _one_hot(space: FiniteSpace, k: int, sign: float = 1.0) -> CommObservable:
    v = np.zeros(space.n)
    v[k] = sign
    return CommObservable(space, v)


def check_lattice(
    spec: SeminormSpec,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
    extra: Sequence[tuple] = (),
) -> CheckReport:
    """L(f v g) <= max(L(f), L(g)) on canonical one-hot pairs and random pairs.

    This inequality characterizes the seminorms that are plain difference
    quotients of a point metric; commutator seminorms can fail it.
    """
    space = spec_space(spec)
    if space is None:
        raise TypeError("the lattice check needs a commutative spec")
    rng = np.random.default_rng(seed)
    configurations = [
        (_one_hot(space, x), _one_hot(space, y))
        for x in range(space.n)
        for y in range(x + 1, space.n)
    ]
    configurations.extend(extra)
    for _ in range(trials):
        configurations.append(
            (_random_observable(spec, rng), _random_observable(spec, rng))
        )

    def predicate(inputs):
        f, g = inputs
        return evaluate(spec, lattice_join(f, g)), max(
            evaluate(spec, f), evaluate(spec, g)
        )

    return _run_predicate("lattice", configurations, predicate, trials, tol)


def check_weak_lattice(
    spec: SeminormSpec,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
    extra: Sequence[tuple] = (),
) -> CheckReport:
    """L(f v 0) <= L(f): clipping at zero should not increase the seminorm.

    Holds for all three-point commutator specs; fails for a known four-point
    instance, included here as a canonical probe on four-point spaces.
    """
    space = spec_space(spec)
    if space is None:
        raise TypeError("the weak-lattice check needs a commutative spec")
    rng = np.random.default_rng(seed)
    configurations: list[tuple] = [
        (_one_hot(space, k, s),) for k in range(space.n) for s in (1.0, -1.0)
    ]
    if space.n == 4:
        configurations.append((CommObservable(space, [4.0, 2.0, 0.0, -1.0]),))
    configurations.extend(extra)
    for _ in range(trials):
        configurations.append((_random_observable(spec, rng),))

    zero = CommObservable(space, np.zeros(space.n))

    def predicate(inputs):
        (f,) = inputs
        return evaluate(spec, lattice_join(f, zero)), evaluate(spec, f)

    return _run_predicate("weak-lattice", configurations, predicate, trials, tol)


def check_leibniz(
    spec: SeminormSpec,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
    extra: Sequence[tuple] = (),
) -> CheckReport:
    """L(fg) <= L(f)||g|| + ||f||L(g) with the sup/operator norm.

    Commutative specs use the pointwise product; the matrix quotient spec
    uses the symmetrized (Jordan) product to stay among Hermitian
    observables, which the report notes.
    """
    flavor = spec_flavor(spec)
    if flavor == "matrix" and not isinstance(spec, QuotientSpec):
        raise TypeError("matrix Leibniz check is defined for the quotient spec")
    rng = np.random.default_rng(seed)
    note = ""
    if flavor == "commutative":
        space = spec_space(spec)
        configurations = [
            (_one_hot(space, x), _one_hot(space, y))
            for x in range(space.n)
            for y in range(space.n)
            if x != y
        ]

        def product(f, g):
            return CommObservable(space, f.values * g.values)

        def norm(f):
            return f.sup_norm()

    else:
        note = "jordan-product"
        configurations = []

        def product(f, g):
            a, b = f.matrix.to_complex(), g.matrix.to_complex()
            return MatObservable(HermMatrix.from_complex((a @ b + b @ a) / 2.0))

        def norm(f):
            return op_norm(f.matrix)

    configurations.extend(extra)
    for _ in range(trials):
        configurations.append(
            (_random_observable(spec, rng), _random_observable(spec, rng))
        )

    def predicate(inputs):
        f, g = inputs
        return evaluate(spec, product(f, g)), (
            evaluate(spec, f) * norm(g) + norm(f) * evaluate(spec, g)
        )

    return _run_predicate("leibniz", configurations, predicate, trials, tol, note)


def check_metric_axioms(
    d: Callable,
    points: Sequence,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
) -> CheckReport:
    """Nonnegativity, zero self-distance, symmetry, and the triangle inequality.

    ``points`` is any finite collection acceptable to ``d``; pairs and
    triples are enumerated when small and sampled (seeded) otherwise.
    Violations are tagged with the failed axiom.
    """
    pts = list(points)
    n = len(pts)
    rng = np.random.default_rng(seed)

    pairs = [(x, y) for x in range(n) for y in range(n) if x != y]
    if len(pairs) > trials:
        idx = rng.choice(len(pairs), size=trials, replace=False)
        pairs = [pairs[i] for i in idx]
    triples = [
        (x, y, z)
        for x in range(n)
        for y in range(n)
        for z in range(n)
        if x != y and y != z and x != z
    ]
    if len(triples) > trials:
        idx = rng.choice(len(triples), size=trials, replace=False)
        triples = [triples[i] for i in idx]

    configurations: list[tuple] = [("identity", pts[x]) for x in range(n)]
    configurations += [("nonnegativity", pts[x], pts[y]) for x, y in pairs]
    configurations += [("positivity", pts[x], pts[y]) for x, y in pairs]
    configurations += [("symmetry", pts[x], pts[y]) for x, y in pairs]
    configurations += [("triangle", pts[x], pts[y], pts[z]) for x, y, z in triples]

    def predicate(inputs):
        kind = inputs[0]
        if kind == "identity":
            return abs(d(inputs[1], inputs[1])), 0.0
        if kind == "nonnegativity":
            return -d(inputs[1], inputs[2]), 0.0
        if kind == "positivity":
            # distinct points must sit at strictly positive distance
            return 2.0 * tol - d(inputs[1], inputs[2]), 0.0
        if kind == "symmetry":
            return abs(d(inputs[1], inputs[2]) - d(inputs[2], inputs[1])), 0.0
        x, y, z = inputs[1], inputs[2], inputs[3]
        return d(x, z), d(x, y) + d(y, z)

    return _run_predicate("metric-axioms", configurations, predicate, trials, tol)


def check_convex(
    d: MetricFunction,
    sampler: StateSampler,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
) -> CheckReport:
    """d(mu, t nu1 + (1-t) nu2) <= t d(mu, nu1) + (1-t) d(mu, nu2)."""
    rng = np.random.default_rng(seed)
    configurations = []
    for _ in range(trials):
        configurations.append(
            (sampler(rng), sampler(rng), sampler(rng), float(rng.uniform()))
        )

    def predicate(inputs):
        mu, nu1, nu2, t = inputs
        return d(mu, mix(nu1, nu2, t)), t * d(mu, nu1) + (1.0 - t) * d(mu, nu2)

    return _run_predicate("convex", configurations, predicate, trials, tol)


def check_midpoint_balanced(
    d: MetricFunction,
    sampler: StateSampler,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
) -> CheckReport:
    """Equal differences give equal distances: mu - nu = mu' - nu' forces
    d(mu, nu) = d(mu', nu').

    Configurations are built by sampling mu, nu, mu' and solving for
    nu' = mu' + nu - mu; samples leaving the state space are rejected.
    """
    rng = np.random.default_rng(seed)
    configurations = []
    for _ in range(trials):
        mu, nu, mu_p = sampler(rng), sampler(rng), sampler(rng)
        nu_p = try_shift(mu_p, difference(nu, mu))
        if nu_p is not None:
            configurations.append((mu, nu, mu_p, nu_p))

    def predicate(inputs):
        mu, nu, mu_p, nu_p = inputs
        return abs(d(mu, nu) - d(mu_p, nu_p)), 0.0

    return _run_predicate("midpoint-balanced", configurations, predicate, trials, tol)


def check_midpoint_concave(
    d: MetricFunction,
    sampler: StateSampler,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
) -> CheckReport:
    """d((mu+mu')/2, (nu+nu')/2) <= (d(mu, nu) + d(mu', nu'))/2."""
    rng = np.random.default_rng(seed)
    configurations = []
    for _ in range(trials):
        configurations.append(tuple(sampler(rng) for _ in range(4)))

    def predicate(inputs):
        mu, nu, mu_p, nu_p = inputs
        return (
            d(mix(mu, mu_p, 0.5), mix(nu, nu_p, 0.5)),
            (d(mu, nu) + d(mu_p, nu_p)) / 2.0,
        )

    return _run_predicate("midpoint-concave", configurations, predicate, trials, tol)


def check_linear(
    d: MetricFunction,
    sampler: StateSampler,
    trials: int = 200,
    seed: int = 0,
    tol: float = PREDICATE_TOL,
) -> CheckReport:
    """d(mu, mu + t v) = t d(nu, nu + v) for zero-sum v and t > 0.

    v is sampled as a scaled difference of states; configurations where
    mu + t v or nu + v leave the state space are rejected.
    """
    rng = np.random.default_rng(seed)
    configurations = []
    for _ in range(trials):
        mu, nu = sampler(rng), sampler(rng)
        sigma, tau = sampler(rng), sampler(rng)
        scale = float(rng.uniform(0.1, 1.0))
        t = float(rng.uniform(0.1, 1.0))
        v = difference(sigma, tau)
        mu_shift = try_shift(mu, v, t * scale)
        nu_shift = try_shift(nu, v, scale)
        if mu_shift is not None and nu_shift is not None:
            configurations.append((mu, mu_shift, nu, nu_shift, t))

    def predicate(inputs):
        mu, mu_shift, nu, nu_shift, t = inputs
        return abs(d(mu, mu_shift) - t * d(nu, nu_shift)), 0.0

    return _run_predicate("linear", configurations, predicate, trials, tol)


@dataclass(frozen=True)
class NormReconstruction:
    """Norm values recovered from a metric, with well-definedness evidence.

    ``discrepancies`` records |d(mu, nu) - d(mu', nu')| over deliberately
    constructed pairs with equal differences; a metric failing midpoint
    balance surfaces here as a large discrepancy.  ``values`` are the norm
    values for the requested zero-sum functionals.
    """

    discrepancies: list[tuple[tuple, float]]
    max_discrepancy: float
    values: list[float]
    executed: int
    trials: int


def norm_from_metric(
    d: MetricFunction,
    sampler: StateSampler,
    functionals: Sequence[ZeroSumVector | TracelessMatrix] = (),
    trials: int = 200,
    seed: int = 0,
) -> NormReconstruction:
    """Reconstruct the norm M(lambda) = d(mu, nu) for lambda = mu - nu.

    Requested functionals are represented as differences of states through
    their positive/negative parts padded with a uniform state (rescaled
    first when the total mass exceeds the unit ball of differences).
    """
    rng = np.random.default_rng(seed)
    discrepancies = []
    executed = 0
    for _ in range(trials):
        mu, nu = sampler(rng), sampler(rng)
        sigma, tau = sampler(rng), sampler(rng)
        c = float(rng.uniform(0.05, 0.5))
        v = difference(sigma, tau)
        mu_p = try_shift(mu, v, c)
        nu_p = try_shift(nu, v, c)
        if mu_p is None or nu_p is None:
            continue
        executed += 1
        gap = abs(d(mu, nu) - d(mu_p, nu_p))
        discrepancies.append(((mu, nu, mu_p, nu_p), gap))
    values = [_norm_value(d, lam) for lam in functionals]
    max_gap = max((g for _, g in discrepancies), default=0.0)
    return NormReconstruction(discrepancies, max_gap, values, executed, trials)


def _norm_value(d: MetricFunction, lam: ZeroSumVector | TracelessMatrix) -> float:
    if isinstance(lam, ZeroSumVector):
        pos = np.maximum(lam.values, 0.0)
        mass = float(np.sum(pos))
        if mass == 0.0:
            return 0.0
        t = min(1.0, 1.0 / mass)
        pad = (1.0 - t * mass) / lam.space.n
        mu = ProbState(lam.space, t * pos + pad)
        nu = ProbState(lam.space, t * np.maximum(-lam.values, 0.0) + pad)
        return d(mu, nu) / t
    n = lam.n
    absolute = herm_abs(lam.matrix)
    pos = (absolute + lam.matrix) * 0.5
    mass = pos.trace()
    if mass <= 1e-14:
        return 0.0
    t = min(1.0, 1.0 / mass)
    pad = (1.0 - t * mass) / n
    eye = HermMatrix(np.eye(n) * pad)
    mu = DensityState(t * pos + eye)
    nu = DensityState(t * (absolute - lam.matrix) * 0.5 + eye)
    return d(mu, nu) / t
