"""Recovering a seminorm from the metric it induces on states.

Two recovered seminorms: the difference-quotient seminorm over the extreme
points only (point masses), and a sampled lower bound on the difference
quotient over all states.  The extreme-point version can fall strictly below
the original seminorm; the all-states version converges back up to it for
the (finite-dimensional, hence lower semicontinuous) families built here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .engine import MetricEngine, metric_table
from .seminorms import SeminormSpec, evaluate, spec_flavor, spec_matrix_dim, spec_space
from .spaces import (
    CommObservable,
    DensityState,
    MatObservable,
    MetricTable,
    Observable,
    ProbState,
    State,
    difference,
    mix,
    pair,
    point_state,
    random_density,
    random_state,
)

GAP_TOL = 1e-6
DEFAULT_REPORT_TOL = 0.05
#: Engine tolerance for the ratio search.  The denominators use the certified
#: upper metric bound, so a loose certification only shrinks the reported
#: lower bound (by about the relative tolerance), never inflates it.
SEARCH_TOL = 1e-4
REFINE_STEPS = 50
REFINE_STEP_SIZE = 0.1
REFINE_DECAY = 0.5
_METRIC_FLOOR = 1e-12


def extreme_seminorm(
    spec: SeminormSpec, f: CommObservable, table: MetricTable | None = None
) -> float:
    """Largest difference quotient of f over point pairs at their metric distance."""
    space = spec_space(spec)
    if space is None:
        raise TypeError("the extreme-point seminorm needs a commutative spec")
    if f.space.labels != space.labels:
        raise ValueError("observable lives on a different space")
    if table is None:
        table = metric_table(spec)
    best = 0.0
    for x in range(space.n):
        for y in range(x + 1, space.n):
            best = max(best, abs(f.values[x] - f.values[y]) / table.distances[x, y])
    return best


class _RatioSearch:
    """Shared machinery: maximize |lambda(f)| / rho(mu, nu) over state pairs."""

    #: Climb milestones double so that any shorter run's evaluation sequence
    #: is a bitwise prefix of a longer run's; the running supremum is then
    #: nondecreasing in the sample count by construction.
    FIRST_MILESTONE = 8

    def __init__(self, spec: SeminormSpec, f: Observable, engine: MetricEngine | None, tol: float):
        self.spec = spec
        self.f = f
        self.engine = engine if engine is not None else MetricEngine(spec)
        self.tol = tol
        self.best = 0.0
        self.best_pair: tuple[State, State] | None = None
        self._record_since_climb = False

    def ratio(self, mu: State, nu: State) -> float:
        # The certified upper metric bound keeps the quotient a true lower
        # bound on the recovered seminorm even at loose engine tolerance.
        numerator = abs(pair(difference(mu, nu), self.f))
        if numerator < _METRIC_FLOOR:
            return 0.0
        denom = self.engine.state_metric(mu, nu, self.tol).upper
        if denom < _METRIC_FLOOR:
            return 0.0
        return numerator / denom

    def consider(self, mu: State, nu: State) -> None:
        r = self.ratio(mu, nu)
        if r > self.best:
            self.best = r
            self.best_pair = (mu, nu)
            self._record_since_climb = True

    def refine(self) -> None:
        """Deterministic coordinate hill climb on the best pair found."""
        if self.best_pair is None:
            return
        mu, nu = self.best_pair
        step = REFINE_STEP_SIZE
        for _ in range(REFINE_STEPS):
            best_move = None
            best_value = self.best
            for which in (0, 1):
                base = (mu, nu)[which]
                for moved in self._moves(base, step):
                    cand = (moved, nu) if which == 0 else (mu, moved)
                    r = self.ratio(*cand)
                    if r > best_value + 1e-12:
                        best_value, best_move = r, cand
            if best_move is None:
                step *= REFINE_DECAY
                if step < 1e-6:
                    break
            else:
                mu, nu = best_move
                self.best = best_value
                self.best_pair = best_move

    def _moves(self, state: State, step: float):
        if isinstance(state, ProbState):
            n = state.space.n
            for i, j in itertools.permutations(range(n), 2):
                t = min(step, float(state.weights[i]))
                if t <= _METRIC_FLOOR:
                    continue
                w = state.weights.copy()
                w[i] -= t
                w[j] += t
                yield ProbState(state.space, w)
        else:
            n = state.n
            t = min(step, 1.0)
            for k in range(n):
                basis = np.zeros((n, n))
                basis[k, k] = 1.0
                yield mix(DensityState(_as_herm(basis)), state, t)

    def _climb_if_record(self) -> None:
        if self._record_since_climb:
            self.refine()
            self._record_since_climb = False

    def run(self, samples: int, seed: int) -> float:
        flavor = spec_flavor(self.spec)
        rng = np.random.default_rng(seed)
        if flavor == "commutative":
            space = spec_space(self.spec)
            for x in range(space.n):
                for y in range(x + 1, space.n):
                    self.consider(point_state(space, x), point_state(space, y))
            draw = lambda: random_state(space, rng)  # noqa: E731
        else:
            n = spec_matrix_dim(self.spec)
            draw = lambda: random_density(n, rng)  # noqa: E731
        milestone = self.FIRST_MILESTONE
        for i in range(1, samples + 1):
            self.consider(draw(), draw())
            if i == milestone:
                self._climb_if_record()
                milestone *= 2
        return self.best


def _as_herm(real_matrix: np.ndarray):
    from .linalg import HermMatrix

    return HermMatrix(real_matrix)


def sampled_recovered_seminorm(
    spec: SeminormSpec,
    f: Observable,
    samples: int = 2000,
    seed: int = 0,
    engine: MetricEngine | None = None,
    tol: float = SEARCH_TOL,
) -> float:
    """Lower bound on the all-states recovered seminorm of f.

    Supremum of |mu(f) - nu(f)| / rho(mu, nu) over every point-state pair,
    ``samples`` seeded random state pairs drawn from a single stream, and
    deterministic 50-step coordinate hill climbs from the best pair found,
    run at doubling sample milestones.  Milestone climbs keep any shorter
    run's evaluation sequence a prefix of a longer run's, so the value is
    nondecreasing in ``samples`` for a fixed seed prefix.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    search = _RatioSearch(spec, f, engine, tol)
    return search.run(samples, seed)


@dataclass(frozen=True)
class ObservableRecord:
    name: str
    seminorm: float
    extreme: float | None
    sampled: float
    extreme_insufficient: bool
    recovery_witnessed: bool


@dataclass(frozen=True)
class RecoveryReport:
    records: list[ObservableRecord] = field(default_factory=list)
    samples: int = 0
    seed: int = 0
    report_tol: float = DEFAULT_REPORT_TOL


def compare(
    spec: SeminormSpec,
    observables: list[Observable],
    samples: int = 2000,
    seed: int = 0,
    report_tol: float = DEFAULT_REPORT_TOL,
    names: list[str] | None = None,
    tol: float = SEARCH_TOL,
    table_tol: float = 1e-9,
) -> RecoveryReport:
    """Per-observable comparison of L, its extreme-point recovery, and the
    sampled all-states recovery.

    Flags observables where the extreme-point seminorm falls short of L
    (extreme points insufficient) and where the sampled recovery reaches L
    up to ``report_tol`` (recovery witnessed).  The extreme column is None
    for matrix specs, whose pure-state manifold is not sampled here.
    """
    commutative = spec_flavor(spec) == "commutative"
    engine = MetricEngine(spec)
    # the gap flag compares L^e against L at 1e-6, so the table must be much
    # tighter than the sampling tolerance; it is only n^2 entries
    table = metric_table(spec, table_tol) if commutative else None
    records = []
    for idx, obs in enumerate(observables):
        name = names[idx] if names else f"obs{idx}"
        value = evaluate(spec, obs)
        extreme = extreme_seminorm(spec, obs, table) if commutative else None
        sampled = sampled_recovered_seminorm(
            spec, obs, samples, seed, engine=engine, tol=tol
        )
        records.append(
            ObservableRecord(
                name=name,
                seminorm=value,
                extreme=extreme,
                sampled=sampled,
                extreme_insufficient=(
                    extreme is not None and extreme < value - GAP_TOL
                ),
                recovery_witnessed=sampled >= value - report_tol,
            )
        )
    return RecoveryReport(records, samples, seed, report_tol)
