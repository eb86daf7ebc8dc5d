"""Lipschitz seminorm families and their unit-ball descriptions.

Five constructions, each vanishing exactly on the constants (multiples of
the identity): commutator seminorms from a skew-adjoint operator, difference
quotients over a cost graph, the L1-of-Laplacian resistance seminorm, the
quotient norm modulo constants, and difference quotients over a full metric
table.  Each family exposes its unit ball to the metric engine either as an
explicit list of linear cuts (polyhedral cases) or through a separation
oracle that linearizes the spectral constraint at a violating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np

from .linalg import HermMatrix, eigh, herm_pack, op_norm
from .resistance import (
    ConductanceGraph,
    _check_connected,
    _normalize_edges,
    laplacian,
    resistance_seminorm,
)
from .spaces import (
    CommObservable,
    FiniteSpace,
    MatObservable,
    MetricTable,
    Observable,
    quotient_norm,
)

SEPARATION_TOL = 1e-9


class DegenerateSeminormError(ValueError):
    """The construction vanishes on a non-constant observable."""


class _PolyhedralUnavailable:
    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "POLYHEDRAL_UNAVAILABLE"


#: Sentinel returned by unit_ball_constraints for spectral unit balls.
POLYHEDRAL_UNAVAILABLE = _PolyhedralUnavailable()


@dataclass(frozen=True)
class Cut:
    """A valid inequality coefficients . x <= bound for a seminorm unit ball.

    Coordinates are the observable's own: point values for the commutative
    flavor, herm_pack coordinates for the matrix flavor.
    """

    coefficients: np.ndarray
    bound: float

    def __init__(self, coefficients, bound: float):
        c = np.asarray(coefficients, dtype=float)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "bound", float(bound))


@dataclass(frozen=True)
class DiracOperator:
    """Skew-adjoint operator plus a representation of the algebra.

    The operator is D = re + i*im with re antisymmetric and im symmetric
    (enforced by projection on construction).  For the commutative flavor,
    ``rep`` sends each Hilbert-space coordinate to a point of ``space`` and
    the algebra acts diagonally with multiplicity; for the matrix flavor
    (``space`` is None) the algebra is all Hermitian m x m matrices acting
    as themselves.  Construction rejects operators whose commutator seminorm
    vanishes on any non-constant observable.
    """

    re: np.ndarray
    im: np.ndarray
    space: FiniteSpace | None
    rep: tuple[int, ...] | None

    def __init__(self, re, im=None, space: FiniteSpace | None = None, rep=None):
        r = np.asarray(re, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("operator matrix must be square")
        m = r.shape[0]
        i = np.zeros((m, m)) if im is None else np.asarray(im, dtype=float)
        if i.shape != (m, m):
            raise ValueError("re and im parts must have the same shape")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(i))):
            raise ValueError("operator entries must be finite")
        r = (r - r.T) / 2.0
        i = (i + i.T) / 2.0
        if space is not None:
            if rep is None:
                if m != space.n:
                    raise ValueError(
                        "rep is required when the Hilbert dimension differs "
                        "from the point count"
                    )
                rep = tuple(range(space.n))
            else:
                rep = tuple(int(k) for k in rep)
            if len(rep) != m:
                raise ValueError(f"rep must assign all {m} Hilbert coordinates")
            if any(not 0 <= k < space.n for k in rep):
                raise ValueError("rep indices out of range")
            if set(rep) != set(range(space.n)):
                raise ValueError("rep must be onto the point set")
        elif rep is not None:
            raise ValueError("rep only applies to the commutative flavor")
        object.__setattr__(self, "re", r)
        object.__setattr__(self, "im", i)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "rep", rep)
        self._check_nondegenerate()

    @property
    def hilbert_dim(self) -> int:
        return self.re.shape[0]

    def commutator(self, a: Observable) -> HermMatrix:
        """[D, pi(a)], a Hermitian matrix for skew-adjoint D."""
        if self.space is not None:
            if not isinstance(a, CommObservable) or a.space.labels != self.space.labels:
                raise TypeError("observable does not live on the operator's space")
            lifted = a.values[np.array(self.rep)]
            diff = lifted[None, :] - lifted[:, None]
            return HermMatrix(self.re * diff, self.im * diff)
        if not isinstance(a, MatObservable) or a.n != self.hilbert_dim:
            raise TypeError("observable dimension does not match the operator")
        d = self.re + 1j * self.im
        h = a.matrix.to_complex()
        return HermMatrix.from_complex(d @ h - h @ d)

    def _check_nondegenerate(self) -> None:
        # rank of a |-> [D, pi(a)] over the observables modulo constants
        if self.space is not None:
            n = self.space.n
            basis = []
            for k in range(n - 1):
                v = np.zeros(n)
                v[k], v[n - 1] = 1.0, -1.0
                basis.append(CommObservable(self.space, v))
            needed = n - 1
        else:
            m = self.hilbert_dim
            basis = []
            for k in range(m - 1):
                d = np.zeros((m, m))
                d[k, k], d[m - 1, m - 1] = 1.0, -1.0
                basis.append(MatObservable(HermMatrix(d)))
            for x in range(m):
                for y in range(x + 1, m):
                    s = np.zeros((m, m))
                    s[x, y] = s[y, x] = 1.0
                    basis.append(MatObservable(HermMatrix(s)))
                    t = np.zeros((m, m))
                    t[x, y], t[y, x] = 1.0, -1.0
                    basis.append(MatObservable(HermMatrix(np.zeros((m, m)), t)))
            needed = m * m - 1
        rows = []
        for obs in basis:
            c = self.commutator(obs)
            rows.append(np.concatenate([c.re.ravel(), c.im.ravel()]))
        mat = np.array(rows)
        scale = max(1.0, float(np.max(np.abs(mat))))
        rank = int(np.linalg.matrix_rank(mat, tol=1e-10 * scale))
        if rank < needed:
            raise DegenerateSeminormError(
                "commutator seminorm vanishes on a non-constant observable"
            )


@dataclass(frozen=True)
class CostGraph:
    """Connected graph with positive symmetric edge costs; absent edges cost +inf."""

    space: FiniteSpace
    costs: dict[tuple[int, int], float]

    def __init__(self, space: FiniteSpace, costs):
        edges = _normalize_edges(space, dict(costs))
        _check_connected(space, edges)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "costs", edges)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.costs)


@dataclass(frozen=True)
class DiracSpec:
    operator: DiracOperator


@dataclass(frozen=True)
class GraphLipSpec:
    graph: CostGraph


@dataclass(frozen=True)
class ResistanceSpec:
    graph: ConductanceGraph


@dataclass(frozen=True)
class QuotientSpec:
    """Quotient-norm seminorm; commutative over ``space`` or matrix of size ``dim``."""

    space: FiniteSpace | None = None
    dim: int | None = None

    def __post_init__(self):
        if (self.space is None) == (self.dim is None):
            raise ValueError("exactly one of space and dim must be given")
        if self.dim is not None and self.dim < 2:
            raise ValueError("matrix flavor needs dimension >= 2")


@dataclass(frozen=True)
class MetricLipSpec:
    table: MetricTable


SeminormSpec = Union[DiracSpec, GraphLipSpec, ResistanceSpec, QuotientSpec, MetricLipSpec]

RESISTANCE_CUTS_MAX_NODES = 20


def spec_flavor(spec: SeminormSpec) -> str:
    """'commutative' or 'matrix'."""
    if isinstance(spec, DiracSpec):
        return "commutative" if spec.operator.space is not None else "matrix"
    if isinstance(spec, QuotientSpec):
        return "commutative" if spec.space is not None else "matrix"
    if isinstance(spec, (GraphLipSpec, ResistanceSpec, MetricLipSpec)):
        return "commutative"
    raise TypeError(f"not a seminorm spec: {spec!r}")


def spec_space(spec: SeminormSpec) -> FiniteSpace | None:
    """The finite point set of a commutative spec, else None."""
    if isinstance(spec, DiracSpec):
        return spec.operator.space
    if isinstance(spec, GraphLipSpec):
        return spec.graph.space
    if isinstance(spec, ResistanceSpec):
        return spec.graph.space
    if isinstance(spec, QuotientSpec):
        return spec.space
    if isinstance(spec, MetricLipSpec):
        return spec.table.space
    raise TypeError(f"not a seminorm spec: {spec!r}")


def spec_matrix_dim(spec: SeminormSpec) -> int:
    if isinstance(spec, DiracSpec) and spec.operator.space is None:
        return spec.operator.hilbert_dim
    if isinstance(spec, QuotientSpec) and spec.dim is not None:
        return spec.dim
    raise TypeError("spec has no matrix flavor")


def _check_flavor(spec: SeminormSpec, a: Observable) -> None:
    if spec_flavor(spec) == "commutative":
        space = spec_space(spec)
        if not isinstance(a, CommObservable) or a.space.labels != space.labels:
            raise TypeError("spec expects a commutative observable on its space")
    else:
        if not isinstance(a, MatObservable) or a.n != spec_matrix_dim(spec):
            raise TypeError("spec expects a matrix observable of matching dimension")


def evaluate(spec: SeminormSpec, a: Observable) -> float:
    """The seminorm value; exactly zero on constants."""
    _check_flavor(spec, a)
    if isinstance(spec, DiracSpec):
        return op_norm(spec.operator.commutator(a))
    if isinstance(spec, GraphLipSpec):
        v = a.values
        return max(
            abs(v[x] - v[y]) / c for (x, y), c in sorted(spec.graph.costs.items())
        )
    if isinstance(spec, ResistanceSpec):
        return resistance_seminorm(spec.graph, a.values)
    if isinstance(spec, QuotientSpec):
        return quotient_norm(a)
    if isinstance(spec, MetricLipSpec):
        v = a.values
        d = spec.table.distances
        best = 0.0
        for x in range(spec.table.n):
            for y in range(x + 1, spec.table.n):
                best = max(best, abs(v[x] - v[y]) / d[x, y])
        return best
    raise TypeError(f"not a seminorm spec: {spec!r}")


def _pair_cuts(n: int, pairs_with_scale) -> list[Cut]:
    cuts = []
    for x, y, scale in pairs_with_scale:
        coeff = np.zeros(n)
        coeff[x], coeff[y] = 1.0 / scale, -1.0 / scale
        cuts.append(Cut(coeff, 1.0))
        cuts.append(Cut(-coeff, 1.0))
    return cuts


def unit_ball_constraints(spec: SeminormSpec) -> list[Cut] | _PolyhedralUnavailable:
    """Explicit linear description of {a : L(a) <= 1}, when one exists.

    Spectral unit balls (commutator seminorms, matrix quotient) return
    POLYHEDRAL_UNAVAILABLE and are reached through separation_oracle.
    """
    if isinstance(spec, GraphLipSpec):
        n = spec.graph.n
        return _pair_cuts(n, ((x, y, c) for (x, y), c in sorted(spec.graph.costs.items())))
    if isinstance(spec, MetricLipSpec):
        n = spec.table.n
        d = spec.table.distances
        return _pair_cuts(
            n, ((x, y, d[x, y]) for x in range(n) for y in range(x + 1, n))
        )
    if isinstance(spec, QuotientSpec) and spec.space is not None:
        n = spec.space.n
        return _pair_cuts(n, ((x, y, 2.0) for x in range(n) for y in range(x + 1, n)))
    if isinstance(spec, ResistanceSpec):
        n = spec.graph.n
        if n > RESISTANCE_CUTS_MAX_NODES:
            raise ValueError(
                f"sign-pattern cuts need n <= {RESISTANCE_CUTS_MAX_NODES}; "
                "use the separation oracle instead"
            )
        lap = laplacian(spec.graph).entries
        cuts = []
        for signs in itertools.product((1.0, -1.0), repeat=n):
            s = np.array(signs)
            cuts.append(Cut(0.5 * (lap @ s), 1.0))
        return cuts
    if isinstance(spec, (DiracSpec, QuotientSpec)):
        return POLYHEDRAL_UNAVAILABLE
    raise TypeError(f"not a seminorm spec: {spec!r}")


_MAX_SEPARATION_CUTS = 8


def _embedding_eigvecs(h: HermMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Embedding spectrum (doubled) and the complex vectors of its columns."""
    w, v = eigh(h.real_embedding())
    m = h.n
    return w, v[:m, :] + 1j * v[m:, :]


def _commutator_functional(op: DiracOperator, u: np.ndarray) -> np.ndarray:
    """Coefficients of g -> u* [D, pi(g)] u over commutative coordinates."""
    d = op.re + 1j * op.im
    w = np.conj(u)[:, None] * d * u[None, :]
    net = (w.sum(axis=0) - w.sum(axis=1)).real
    return np.bincount(np.array(op.rep), weights=net, minlength=op.space.n)


def _compression_coords(u: np.ndarray) -> np.ndarray:
    """Coefficients of b -> u* b u over herm_pack coordinates."""
    n = u.shape[0]
    w = np.conj(u)[:, None] * u[None, :]
    iu = np.triu_indices(n, k=1)
    return np.concatenate([w.real[np.diag_indices(n)], 2.0 * w.real[iu], -2.0 * w.imag[iu]])


def _dedup_cuts(cuts: list[Cut]) -> list[Cut]:
    seen = set()
    out = []
    for cut in cuts:
        key = tuple(np.round(cut.coefficients, 10))
        if key not in seen:
            seen.add(key)
            out.append(cut)
    return out


def separation_cuts(spec: SeminormSpec, a: Observable) -> list[Cut]:
    """Valid cuts violated at ``a``, strongest first; empty when L(a) <= 1 (+tol).

    Spectral families linearize through eigenvectors of the violating matrix:
    any unit compression stays below the operator norm, so every returned cut
    is satisfied by the whole unit ball.  Several eigen-directions can exceed
    the ball at once, and returning them together sharpens the engine's outer
    approximation far faster than one cut at a time.
    """
    value = evaluate(spec, a)
    if value <= 1.0 + SEPARATION_TOL:
        return []
    if isinstance(spec, DiracSpec):
        # The matrix flavor is rejected at construction (ledgered), so the
        # operator always carries a commutative representation here.
        op = spec.operator
        w, vectors = _embedding_eigvecs(op.commutator(a))
        order = np.argsort(-np.abs(w))
        cuts = []
        for idx in order[: 2 * _MAX_SEPARATION_CUTS]:
            if abs(w[idx]) <= 1.0 + SEPARATION_TOL:
                break
            sign = 1.0 if w[idx] >= 0 else -1.0
            cuts.append(Cut(sign * _commutator_functional(op, vectors[:, idx]), 1.0))
        return _dedup_cuts(cuts)[:_MAX_SEPARATION_CUTS]
    if isinstance(spec, QuotientSpec) and spec.dim is not None:
        w, vectors = _embedding_eigvecs(a.matrix)
        coords = herm_pack(a.matrix)
        cuts = []
        hi = np.argsort(-w)[:_MAX_SEPARATION_CUTS]
        lo = np.argsort(w)[:_MAX_SEPARATION_CUTS]
        for i in hi:
            for j in lo:
                if w[i] - w[j] <= 2.0 * (1.0 + SEPARATION_TOL):
                    continue
                coeff = (
                    _compression_coords(vectors[:, i])
                    - _compression_coords(vectors[:, j])
                ) / 2.0
                cuts.append(Cut(coeff, 1.0))
        cuts.sort(key=lambda cut: -float(cut.coefficients @ coords))
        return _dedup_cuts(cuts)[:_MAX_SEPARATION_CUTS]
    if isinstance(spec, ResistanceSpec):
        lap = laplacian(spec.graph).entries
        image = lap @ a.values
        signs = np.where(image >= 0.0, 1.0, -1.0)
        return [Cut(0.5 * (lap @ signs), 1.0)]
    # Polyhedral pair families: every violated pair cut, most violated first.
    v = a.values
    n = a.space.n
    if isinstance(spec, GraphLipSpec):
        candidates = [(x, y, c) for (x, y), c in sorted(spec.graph.costs.items())]
    elif isinstance(spec, MetricLipSpec):
        d = spec.table.distances
        candidates = [(x, y, d[x, y]) for x in range(n) for y in range(x + 1, n)]
    else:  # commutative quotient
        candidates = [(x, y, 2.0) for x in range(n) for y in range(x + 1, n)]
    violated = sorted(
        (t for t in candidates if abs(v[t[0]] - v[t[1]]) / t[2] > 1.0 + SEPARATION_TOL),
        key=lambda t: -abs(v[t[0]] - v[t[1]]) / t[2],
    )
    cuts = []
    for x, y, scale in violated[:_MAX_SEPARATION_CUTS]:
        coeff = np.zeros(n)
        sign = 1.0 if v[x] >= v[y] else -1.0
        coeff[x], coeff[y] = sign / scale, -sign / scale
        cuts.append(Cut(coeff, 1.0))
    return cuts


def separation_oracle(spec: SeminormSpec, a: Observable) -> Cut | None:
    """None when L(a) <= 1 (+1e-9); otherwise a cut separating a from the ball.

    Spectral cases linearize the constraint through the extremal eigenvector
    of the violating matrix, so the returned cut is satisfied by the whole
    unit ball yet violated at ``a``.
    """
    cuts = separation_cuts(spec, a)
    return cuts[0] if cuts else None


def objective_warm_start(spec: SeminormSpec, lam) -> tuple[list[Cut], list[Observable]]:
    """Valid cuts and feasible candidates tailored to a dual-norm objective.

    Purely an accelerator for the metric engine: every returned cut is
    satisfied by the whole unit ball and every candidate is checked for
    feasibility by the caller, so certificates stay honest.

    For the matrix quotient, cuts over the objective's own eigenbasis make
    the relaxation value exactly the trace norm, and the gauged sign matrix
    attains it.  For the resistance seminorm, the solved circuit potential
    and its sign-pattern cut close the gap immediately.
    """
    from .spaces import TracelessMatrix, ZeroSumVector

    if (
        isinstance(spec, QuotientSpec)
        and spec.dim is not None
        and isinstance(lam, TracelessMatrix)
    ):
        from .linalg import herm_sign

        n = lam.n
        _, vectors = _embedding_eigvecs(lam.matrix)
        comps = [_compression_coords(vectors[:, k]) for k in range(2 * n)]
        cuts = []
        for i in range(2 * n):
            for j in range(2 * n):
                if i != j:
                    cuts.append(Cut((comps[i] - comps[j]) / 2.0, 1.0))
        sign = herm_sign(lam.matrix)
        gauge = sign.trace() / n
        shifted = HermMatrix(sign.re - gauge * np.eye(n), sign.im)
        return _dedup_cuts(cuts), [MatObservable(shifted)]
    if isinstance(spec, ResistanceSpec) and isinstance(lam, ZeroSumVector):
        from .linalg import laplacian_solve

        lap = laplacian(spec.graph)
        potential = laplacian_solve(lap, lam.values)
        signs = np.where(lap.entries @ potential >= 0.0, 1.0, -1.0)
        candidate = CommObservable(spec.graph.space, potential)
        return [Cut(0.5 * (lap.entries @ signs), 1.0)], [candidate]
    return [], []


def dirac_from_cost(graph: CostGraph) -> DiracOperator:
    """Flip-and-scale operator on the directed-edge space of a cost graph.

    The Hilbert space has one coordinate per directed edge; the operator
    swaps edge orientations and divides by the edge cost, and the algebra
    acts by the value at the edge source.  Its commutator seminorm equals
    the cost-graph difference-quotient seminorm exactly.  The flip-and-scale
    matrix is symmetric, so it is stored as the imaginary part (multiplying
    by i makes it skew-adjoint without changing any seminorm value).
    """
    edges = graph.edges
    m = 2 * len(edges)
    sym = np.zeros((m, m))
    rep = []
    for k, (x, y) in enumerate(edges):
        inv = 1.0 / graph.costs[(x, y)]
        sym[2 * k, 2 * k + 1] = sym[2 * k + 1, 2 * k] = inv
        rep.extend([x, y])
    return DiracOperator(
        np.zeros((m, m)), sym, space=graph.space, rep=tuple(rep)
    )


def lattice_join(f: CommObservable, g: CommObservable) -> CommObservable:
    """Pointwise maximum."""
    if f.space.labels != g.space.labels:
        raise ValueError("observables live on different spaces")
    return CommObservable(f.space, np.maximum(f.values, g.values))
