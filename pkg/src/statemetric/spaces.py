"""Finite order-unit spaces, their states, and zero-sum functionals.

Two flavors throughout: real functions on a finite labelled point set
(commutative) and Hermitian matrices (full matrix algebra).  States are
probability vectors or trace-1 density matrices; pairing uses the plain sum
and the unnormalized trace, the convention under which the quotient-seminorm
metric between density matrices is exactly the trace distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .linalg import HermMatrix, eigh

WEIGHT_CLAMP = 1e-15
SUM_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class FiniteSpace:
    """A finite point set with distinct labels; at least two points."""

    labels: tuple[str, ...]

    def __init__(self, labels):
        labels = tuple(str(x) for x in labels)
        if len(labels) < 2:
            raise ValueError("a finite space needs at least two points")
        if len(set(labels)) != len(labels):
            raise ValueError("point labels must be distinct")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown point label {label!r}") from None


@dataclass(frozen=True)
class CommObservable:
    """A real function on a finite space."""

    space: FiniteSpace
    values: np.ndarray

    def __init__(self, space: FiniteSpace, values):
        v = np.asarray(values, dtype=float)
        if v.shape != (space.n,):
            raise ValueError(f"expected {space.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("observable values must be finite")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", v)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class MatObservable:
    """A Hermitian matrix observable."""

    matrix: HermMatrix

    @property
    def n(self) -> int:
        return self.matrix.n


Observable = Union[CommObservable, MatObservable]


@dataclass(frozen=True)
class ProbState:
    """Probability vector on a finite space.

    Weights in [-1e-15, 0) are clamped to zero and the vector is renormalized
    when the total is within 1e-12 of one, so round-tripped states survive
    serialization noise without admitting genuinely invalid data.
    """

    space: FiniteSpace
    weights: np.ndarray

    def __init__(self, space: FiniteSpace, weights):
        w = np.asarray(weights, dtype=float)
        if w.shape != (space.n,):
            raise ValueError(f"expected {space.n} weights, got shape {w.shape}")
        if np.any(w < -WEIGHT_CLAMP):
            raise ValueError("state weights must be nonnegative")
        w = np.where(w < 0.0, 0.0, w)
        total = float(np.sum(w))
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"state weights sum to {total}, expected 1")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "weights", w / total)


@dataclass(frozen=True)
class DensityState:
    """Positive semidefinite matrix of trace 1 (unnormalized trace)."""

    matrix: HermMatrix

    def __init__(self, matrix: HermMatrix):
        w, _ = eigh(matrix.real_embedding())
        if float(np.min(w)) < -PSD_TOL:
            raise ValueError(f"density matrix has eigenvalue {float(np.min(w))}")
        tr = matrix.trace()
        if abs(tr - 1.0) > SUM_TOL:
            raise ValueError(f"density matrix has trace {tr}, expected 1")
        object.__setattr__(self, "matrix", matrix * (1.0 / tr))

    @property
    def n(self) -> int:
        return self.matrix.n


State = Union[ProbState, DensityState]


@dataclass(frozen=True)
class ZeroSumVector:
    """Commutative zero-sum functional: a signed weight vector with total 0."""

    space: FiniteSpace
    values: np.ndarray

    def __init__(self, space: FiniteSpace, values):
        v = np.asarray(values, dtype=float)
        if v.shape != (space.n,):
            raise ValueError(f"expected {space.n} components, got shape {v.shape}")
        if abs(float(np.sum(v))) > SUM_TOL * (1.0 + float(np.max(np.abs(v), initial=0.0))):
            raise ValueError("functional components must sum to zero")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class TracelessMatrix:
    """Matrix-flavor zero-sum functional: a Hermitian matrix of trace 0."""

    matrix: HermMatrix

    def __init__(self, matrix: HermMatrix):
        tr = matrix.trace()
        scale = 1.0 + float(np.max(np.abs(matrix.re), initial=0.0))
        if abs(tr) > SUM_TOL * scale:
            raise ValueError(f"functional must have trace 0, got {tr}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n(self) -> int:
        return self.matrix.n


ZeroSumFunctional = Union[ZeroSumVector, TracelessMatrix]


METRIC_TOL = 1e-9


@dataclass(frozen=True)
class MetricTable:
    """Validated symmetric distance table over the points of a finite space.

    Zero diagonal, strictly positive off-diagonal entries, symmetry, and the
    triangle inequality are all enforced (within 1e-9) at construction: every
    table the engine produces is a genuine metric, and ingested tables must
    be too.
    """

    space: FiniteSpace
    distances: np.ndarray

    def __init__(self, space: FiniteSpace, distances):
        d = np.asarray(distances, dtype=float)
        n = space.n
        if d.shape != (n, n):
            raise ValueError(f"distance table must be {n}x{n}, got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("distances must be finite")
        if np.max(np.abs(d - d.T)) > METRIC_TOL:
            raise ValueError("distance table must be symmetric")
        d = (d + d.T) / 2.0
        if np.max(np.abs(np.diag(d))) > METRIC_TOL:
            raise ValueError("distance table must have zero diagonal")
        np.fill_diagonal(d, 0.0)
        off = d[~np.eye(n, dtype=bool)]
        if np.any(off <= 0.0):
            raise ValueError("off-diagonal distances must be strictly positive")
        for x in range(n):
            for y in range(n):
                if x == y:
                    continue
                slack = d[x, :] + d[:, y] - d[x, y]
                if float(np.min(slack)) < -METRIC_TOL:
                    raise ValueError(
                        f"triangle inequality fails through pair "
                        f"({space.labels[x]}, {space.labels[y]})"
                    )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "distances", d)

    @property
    def n(self) -> int:
        return self.space.n

    def distance(self, x: str | int, y: str | int) -> float:
        i = x if isinstance(x, int) else self.space.index(x)
        j = y if isinstance(y, int) else self.space.index(y)
        return float(self.distances[i, j])


def quotient_norm(a: Observable) -> float:
    """(max - min)/2 of the values, or of the spectrum for matrix observables.

    This is the norm of the observable modulo constants, and the simplest
    Lipschitz seminorm on either flavor.
    """
    if isinstance(a, CommObservable):
        return float(np.max(a.values) - np.min(a.values)) / 2.0
    w, _ = eigh(a.matrix.real_embedding())
    return float(np.max(w) - np.min(w)) / 2.0


def point_state(space: FiniteSpace, index: int) -> ProbState:
    """The delta measure at the given point."""
    if not 0 <= index < space.n:
        raise IndexError(f"point index {index} out of range for n={space.n}")
    w = np.zeros(space.n)
    w[index] = 1.0
    return ProbState(space, w)


def difference(mu: State, nu: State) -> ZeroSumFunctional:
    """mu - nu as a zero-sum functional."""
    if isinstance(mu, ProbState) and isinstance(nu, ProbState):
        if mu.space.labels != nu.space.labels:
            raise ValueError("states live on different spaces")
        return ZeroSumVector(mu.space, mu.weights - nu.weights)
    if isinstance(mu, DensityState) and isinstance(nu, DensityState):
        if mu.n != nu.n:
            raise ValueError("density matrices have different dimensions")
        return TracelessMatrix(mu.matrix - nu.matrix)
    raise TypeError("cannot mix commutative and matrix states")


def pair(lam: Union[ZeroSumFunctional, State], a: Observable) -> float:
    """Evaluate a functional or state on an observable.

    Commutative pairing is the weighted sum; matrix pairing is the
    unnormalized trace of the product (real for Hermitian pairs).
    """
    if isinstance(a, CommObservable):
        if isinstance(lam, ProbState):
            vec, space = lam.weights, lam.space
        elif isinstance(lam, ZeroSumVector):
            vec, space = lam.values, lam.space
        else:
            raise TypeError("commutative observable paired with matrix functional")
        if space.labels != a.space.labels:
            raise ValueError("functional and observable live on different spaces")
        return float(vec @ a.values)
    if isinstance(lam, DensityState):
        m = lam.matrix
    elif isinstance(lam, TracelessMatrix):
        m = lam.matrix
    else:
        raise TypeError("matrix observable paired with commutative functional")
    if m.n != a.n:
        raise ValueError("functional and observable have different dimensions")
    # trace(lam . a) for Hermitian pairs reduces to real Hilbert-Schmidt sums
    return float(np.sum(m.re * a.matrix.re) + np.sum(m.im * a.matrix.im))


def mix(mu: State, nu: State, t: float) -> State:
    """Convex combination t*mu + (1-t)*nu."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    if isinstance(mu, ProbState) and isinstance(nu, ProbState):
        return ProbState(mu.space, t * mu.weights + (1.0 - t) * nu.weights)
    if isinstance(mu, DensityState) and isinstance(nu, DensityState):
        return DensityState(t * mu.matrix + (1.0 - t) * nu.matrix)
    raise TypeError("cannot mix commutative and matrix states")


def try_shift(mu: State, lam: ZeroSumFunctional, t: float = 1.0) -> State | None:
    """mu + t*lam when it is again a state, else None.

    Used by the metric-axiom checkers, which reject infeasible sampled
    configurations instead of projecting them back onto the state space.
    """
    if isinstance(mu, ProbState) and isinstance(lam, ZeroSumVector):
        w = mu.weights + t * lam.values
        if np.any(w < -WEIGHT_CLAMP):
            return None
        return ProbState(mu.space, w)
    if isinstance(mu, DensityState) and isinstance(lam, TracelessMatrix):
        m = mu.matrix + t * lam.matrix
        w, _ = eigh(m.real_embedding())
        if float(np.min(w)) < -PSD_TOL:
            return None
        return DensityState(m)
    raise TypeError("state and functional flavors do not match")


def random_state(space: FiniteSpace, rng: np.random.Generator) -> ProbState:
    """Uniform (flat Dirichlet) sample from the probability simplex."""
    w = rng.exponential(size=space.n)
    return ProbState(space, w / np.sum(w))


def random_density(n: int, rng: np.random.Generator) -> DensityState:
    """Full-support random density matrix via A A* / trace with Gaussian A."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = a @ a.conj().T
    h /= np.trace(h).real
    return DensityState(HermMatrix.from_complex(h))
