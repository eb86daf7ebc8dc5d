"""Dense numerical kernels shared by every other module.

Symmetric/Hermitian eigendecomposition, operator and trace norms, Laplacian
solves with a connectivity check, and a small deterministic dense LP solver.
Complex Hermitian matrices are handled exclusively through the 2n x 2n real
embedding [[re, -im], [im, re]], which doubles the spectrum but preserves
operator norms, so a single real symmetric eigensolver serves everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

FEASIBILITY_TOL = 1e-9
RANK_TOL = 1e-10


class SolverFailure(RuntimeError):
    """Numerical failure inside an eigensolve or a simplex pivot."""


class DisconnectedGraphError(ValueError):
    """Laplacian kernel has dimension > 1: the underlying graph is disconnected."""


def _as_square(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric matrix; construction symmetrizes exactly."""

    entries: np.ndarray

    def __init__(self, entries):
        a = _as_square(entries)
        object.__setattr__(self, "entries", (a + a.T) / 2.0)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class HermMatrix:
    """Hermitian matrix H = re + i*im stored as a real pair.

    ``re`` is forced symmetric and ``im`` antisymmetric on construction, so
    the represented matrix satisfies H = H* exactly.
    """

    re: np.ndarray
    im: np.ndarray

    def __init__(self, re, im=None):
        r = _as_square(re)
        i = np.zeros_like(r) if im is None else _as_square(im)
        if i.shape != r.shape:
            raise ValueError("re and im parts must have the same shape")
        object.__setattr__(self, "re", (r + r.T) / 2.0)
        object.__setattr__(self, "im", (i - i.T) / 2.0)

    @property
    def n(self) -> int:
        return self.re.shape[0]

    @classmethod
    def from_complex(cls, h) -> "HermMatrix":
        h = np.asarray(h, dtype=complex)
        return cls(h.real, h.imag)

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    def real_embedding(self) -> SymMatrix:
        """2n x 2n symmetric [[re, -im], [im, re]]; spectrum doubled, norm kept."""
        top = np.hstack([self.re, -self.im])
        bot = np.hstack([self.im, self.re])
        return SymMatrix(np.vstack([top, bot]))

    def trace(self) -> float:
        return float(np.trace(self.re))

    def __add__(self, other: "HermMatrix") -> "HermMatrix":
        return HermMatrix(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "HermMatrix") -> "HermMatrix":
        return HermMatrix(self.re - other.re, self.im - other.im)

    def __mul__(self, c: float) -> "HermMatrix":
        return HermMatrix(self.re * c, self.im * c)

    __rmul__ = __mul__


def eigh(a: SymMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a SymMatrix."""
    try:
        w, v = np.linalg.eigh(a.entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise SolverFailure(f"symmetric eigensolve did not converge: {exc}") from exc
    return w, v


def _spectrum(a: SymMatrix | HermMatrix) -> np.ndarray:
    if isinstance(a, HermMatrix):
        w, _ = eigh(a.real_embedding())
        return w
    w, _ = eigh(a)
    return w


def op_norm(a: SymMatrix | HermMatrix) -> float:
    """Operator norm: the largest absolute eigenvalue."""
    w = _spectrum(a)
    return float(np.max(np.abs(w))) if w.size else 0.0


def trace_norm(a: SymMatrix | HermMatrix) -> float:
    """Sum of absolute eigenvalues (real-embedding spectrum halved for HermMatrix)."""
    w = _spectrum(a)
    total = float(np.sum(np.abs(w)))
    return total / 2.0 if isinstance(a, HermMatrix) else total


def laplacian_solve(lap: SymMatrix, lam: Sequence[float]) -> np.ndarray:
    """Solve lap @ f = lam on the zero-sum gauge slice.

    ``lap`` must be the Laplacian of a connected graph (kernel exactly the
    constant vectors) and ``lam`` must sum to zero.  The solve goes through
    the eigendecomposition pseudo-inverse, which also yields the connectivity
    check: any second near-zero eigenvalue raises DisconnectedGraphError.
    """
    rhs = np.asarray(lam, dtype=float)
    if rhs.shape != (lap.n,):
        raise ValueError(f"right-hand side has length {rhs.shape}, expected {lap.n}")
    scale = 1.0 + float(np.max(np.abs(rhs))) if rhs.size else 1.0
    if abs(float(np.sum(rhs))) > 1e-12 * scale:
        raise ValueError("right-hand side must sum to zero")
    w, v = eigh(lap)
    wmax = float(np.max(np.abs(w))) if w.size else 0.0
    cutoff = RANK_TOL * max(wmax, 1.0)
    null = np.abs(w) < cutoff
    if int(np.sum(null)) != 1:
        raise DisconnectedGraphError(
            f"Laplacian kernel has dimension {int(np.sum(null))}, expected 1"
        )
    inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, w))
    f = v @ (inv * (v.T @ rhs))
    return f - float(np.mean(f))


def herm_abs(h: HermMatrix) -> HermMatrix:
    """Matrix absolute value |H| = sqrt(H*H).

    Computed through the real embedding, which is an algebra homomorphism,
    so applying the scalar absolute value to the embedded spectrum and
    reading back the blocks gives exactly the embedded |H|.
    """
    emb = h.real_embedding()
    w, v = eigh(emb)
    full = v @ (np.abs(w)[:, None] * v.T)
    n = h.n
    return HermMatrix(full[:n, :n], full[n:, :n])


def herm_sign(h: HermMatrix) -> HermMatrix:
    """Matrix sign: +1/-1 on the positive/negative eigenspaces, 0 on the kernel."""
    emb = h.real_embedding()
    w, v = eigh(emb)
    full = v @ (np.sign(w)[:, None] * v.T)
    n = h.n
    return HermMatrix(full[:n, :n], full[n:, :n])


def herm_coord_dim(n: int) -> int:
    """Real dimension of the Hermitian n x n matrices."""
    return n * n


def herm_pack(h: HermMatrix) -> np.ndarray:
    """Real coordinates of a Hermitian matrix.

    Ordering: diagonal entries, then the real parts of the strict upper
    triangle in lexicographic order, then the imaginary parts likewise.
    """
    n = h.n
    iu = np.triu_indices(n, k=1)
    return np.concatenate([np.diag(h.re), h.re[iu], h.im[iu]])


def herm_unpack(n: int, coords) -> HermMatrix:
    """Inverse of herm_pack."""
    c = np.asarray(coords, dtype=float)
    if c.shape != (herm_coord_dim(n),):
        raise ValueError(f"expected {herm_coord_dim(n)} coordinates, got {c.shape}")
    k = n * (n - 1) // 2
    iu = np.triu_indices(n, k=1)
    re = np.diag(c[:n]).astype(float)
    re[iu] = c[n : n + k]
    re = re + np.triu(re, k=1).T
    im = np.zeros((n, n))
    im[iu] = c[n + k :]
    im = im - im.T
    return HermMatrix(re, im)


class LpStatus(Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LinearProgram:
    """max objective . x  subject to  row . x <= bound per constraint, x free."""

    objective: np.ndarray
    constraints: list[tuple[np.ndarray, float]] = field(default_factory=list)

    def __init__(self, objective, constraints=()):
        c = np.asarray(objective, dtype=float)
        if c.ndim != 1:
            raise ValueError("objective must be a vector")
        rows = []
        for coeff, bound in constraints:
            r = np.asarray(coeff, dtype=float)
            if r.shape != c.shape:
                raise ValueError(
                    f"constraint row has length {r.shape}, expected {c.shape}"
                )
            rows.append((r, float(bound)))
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", rows)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @classmethod
    def from_arrays(cls, objective: np.ndarray, a: np.ndarray, b: np.ndarray) -> "LinearProgram":
        """Constraint matrix form; skips per-row validation for hot paths."""
        prog = cls.__new__(cls)
        object.__setattr__(prog, "objective", np.asarray(objective, dtype=float))
        object.__setattr__(
            prog,
            "constraints",
            list(zip(np.asarray(a, dtype=float), np.asarray(b, dtype=float))),
        )
        return prog


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    point: np.ndarray | None = None
    value: float | None = None
    ray: np.ndarray | None = None


def _bland_entering(reduced: np.ndarray, eligible: np.ndarray) -> int | None:
    candidates = np.nonzero(eligible & (reduced > RANK_TOL))[0]
    return int(candidates[0]) if candidates.size else None


def _dantzig_entering(reduced: np.ndarray, eligible: np.ndarray) -> int | None:
    masked = np.where(eligible, reduced, -np.inf)
    col = int(np.argmax(masked))  # argmax takes the smallest index on ties
    return col if masked[col] > RANK_TOL else None


def _bland_leaving(tableau: np.ndarray, basis: list[int], col: int) -> int | None:
    column = tableau[:, col]
    mask = column > RANK_TOL
    if not np.any(mask):
        return None
    ratios = np.where(mask, tableau[:, -1] / np.where(mask, column, 1.0), np.inf)
    best = float(np.min(ratios))
    tied = np.nonzero(ratios == best)[0]
    if tied.size == 1:
        return int(tied[0])
    # ties broken by smallest basis variable index (Bland's rule)
    return int(min(tied, key=lambda i: basis[i]))


def _pivot(tableau: np.ndarray, basis: list[int], row: int, col: int) -> None:
    piv = tableau[row, col]
    if abs(piv) <= RANK_TOL:
        raise SolverFailure("numerically singular simplex basis")
    tableau[row] /= piv
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= factors[:, None] * tableau[row]
    basis[row] = col


_REFACTOR_EVERY = 40
_STALL_LIMIT = 12


def _run_simplex(
    tableau: np.ndarray,
    basis: list[int],
    cost: np.ndarray,
    eligible: np.ndarray,
    max_iter: int,
    original: np.ndarray | None = None,
) -> int | None:
    """Maximize cost over the tableau; deterministic and anti-cycling.

    Dantzig's most-positive-reduced-cost rule (ties to the smallest index)
    drives ordinary progress; after a run of degenerate pivots the solver
    switches permanently to Bland's rule, whose finiteness guarantee breaks
    any cycle.  Returns None on optimality, or the entering column index
    when the program is unbounded in that direction.  Long pivot runs
    accumulate floating-point drift, so the tableau is periodically
    refactorized from the original data through the current basis.
    """
    stalled = 0
    use_bland = False
    last_value = -np.inf
    for iteration in range(max_iter):
        if original is not None and iteration and iteration % _REFACTOR_EVERY == 0:
            _refactorize(tableau, basis, original)
        basis_arr = np.asarray(basis)
        z = cost - cost[basis_arr] @ tableau[:, :-1]
        if not use_bland:
            value = float(cost[basis_arr] @ tableau[:, -1])
            if value > last_value + RANK_TOL:
                stalled = 0
                last_value = value
            else:
                stalled += 1
                if stalled > _STALL_LIMIT:
                    use_bland = True
        col = _bland_entering(z, eligible) if use_bland else _dantzig_entering(z, eligible)
        if col is None:
            if original is not None and iteration >= _REFACTOR_EVERY:
                _refactorize(tableau, basis, original)
            return None
        row = _bland_leaving(tableau, basis, col)
        if row is None:
            return col
        _pivot(tableau, basis, row, col)
    raise SolverFailure("simplex iteration cap exceeded")


def _refactorize(tableau: np.ndarray, basis: list[int], original: np.ndarray) -> None:
    try:
        fresh = np.linalg.solve(original[:, basis], original)
    except np.linalg.LinAlgError:  # keep the drifted tableau rather than crash
        return
    tableau[:, :] = fresh


class IncrementalMax:
    """Cutting-plane workhorse: max c.x over a growing set of c_i.x <= b_i.

    Free variables are split once; constraints only ever get appended and
    bounds must be nonnegative (true for unit-ball cuts and boxes, which all
    admit x = 0).  The first solve runs the primal simplex from the all-slack
    basis; each appended constraint is repaired with dual-simplex pivots from
    the previous optimal basis, which is what makes long cutting-plane loops
    cheap.  Stalls or numerical trouble fall back to a deterministic fresh
    primal solve from the stored original data.
    """

    _DUAL_CAP = 400

    def __init__(self, objective, rows, bounds):
        self.obj = np.asarray(objective, dtype=float)
        self.n = self.obj.shape[0]
        self._rows = [np.asarray(r, dtype=float) for r in rows]
        self._bounds = [float(b) for b in bounds]
        if any(b < 0 for b in self._bounds):
            raise ValueError("incremental solver needs nonnegative bounds")
        self._rebuild()

    def _rebuild(self) -> None:
        m = len(self._rows)
        a = np.array(self._rows).reshape(m, self.n)
        lifted = np.hstack([a, -a, np.eye(m)])
        self.tableau = np.hstack([lifted, np.array(self._bounds)[:, None]])
        self.basis = list(range(2 * self.n, 2 * self.n + m))
        self.cost = np.concatenate([self.obj, -self.obj, np.zeros(m)])
        self._original = self.tableau.copy()
        self._solved = False

    def _primal(self) -> None:
        eligible = np.ones(self.cost.shape[0], dtype=bool)
        col = _run_simplex(
            self.tableau, self.basis, self.cost, eligible, 20000, self._original
        )
        if col is not None:
            raise SolverFailure("unit-ball relaxation reported unbounded")
        self._solved = True

    def _dual_repair(self) -> bool:
        # cutting-plane gaps shrink far below the LP feasibility tolerance,
        # so repair down to near machine precision; stalls trigger a rebuild
        for _ in range(self._DUAL_CAP):
            b = self.tableau[:, -1]
            bad = np.nonzero(b < -1e-13)[0]
            if bad.size == 0:
                return True
            row = int(min(bad, key=lambda i: (b[i], self.basis[i])))
            coeffs = self.tableau[row, :-1]
            z = self.cost - self.cost[np.asarray(self.basis)] @ self.tableau[:, :-1]
            candidates = np.nonzero(coeffs < -RANK_TOL)[0]
            if candidates.size == 0:
                return False
            ratios = np.abs(z[candidates] / coeffs[candidates])
            best = int(candidates[np.lexsort((candidates, ratios))[0]])
            _pivot(self.tableau, self.basis, row, best)
        return False

    def add_constraint(self, row, bound: float) -> None:
        row = np.asarray(row, dtype=float)
        self._rows.append(row)
        self._bounds.append(float(bound))
        m, width = self.tableau.shape
        grown = np.zeros((m + 1, width + 1))
        grown[:m, : width - 1] = self.tableau[:, :-1]
        grown[:m, -1] = self.tableau[:, -1]
        grown[m, : self.n] = row
        grown[m, self.n : 2 * self.n] = -row
        grown[m, width - 1] = 1.0
        grown[m, -1] = bound
        self.tableau = grown
        self.cost = np.append(self.cost, 0.0)
        original = np.zeros((m + 1, width + 1))
        original[:m, : width - 1] = self._original[:, :-1]
        original[:m, -1] = self._original[:, -1]
        original[m] = grown[m]
        self._original = original
        # eliminate current basic variables from the appended row
        for i, var in enumerate(self.basis):
            factor = self.tableau[m, var]
            if factor != 0.0:
                self.tableau[m] -= factor * self.tableau[i]
        self.basis.append(width - 1)

    def solve(self) -> tuple[float, np.ndarray]:
        if not self._solved:
            self._primal()
        else:
            if not self._dual_repair():
                self._rebuild()
            # objective is unchanged, so this usually needs zero pivots
            self._primal()
        x = np.zeros(self.cost.shape[0])
        for i in range(self.tableau.shape[0]):
            x[self.basis[i]] = self.tableau[i, -1]
        point = x[: self.n] - x[self.n : 2 * self.n]
        return float(self.obj @ point), point


def solve_lp(program: LinearProgram, max_iter: int = 20000) -> LpOutcome:
    """Dense two-phase simplex with Bland's anti-cycling rule.

    Free variables are split internally (x = u - v).  The outcome is
    deterministic for identical inputs; OPTIMAL outcomes are vertex
    solutions of the lifted nonnegative program, UNBOUNDED outcomes carry
    an improving ray in the original coordinates.
    """
    n = program.n_vars
    m = len(program.constraints)
    if m == 0:
        # No constraints: any nonzero objective is unbounded.
        if np.any(np.abs(program.objective) > RANK_TOL):
            ray = np.sign(program.objective).astype(float)
            ray[np.abs(program.objective) <= RANK_TOL] = 0.0
            return LpOutcome(LpStatus.UNBOUNDED, ray=ray)
        return LpOutcome(LpStatus.OPTIMAL, point=np.zeros(n), value=0.0)

    a = np.array([row for row, _ in program.constraints], dtype=float)
    b = np.array([bound for _, bound in program.constraints], dtype=float)

    # Lift to equality form over nonnegative variables: [A, -A, I][u; v; s] = b.
    lifted = np.hstack([a, -a, np.eye(m)])
    flip = b < 0
    lifted[flip] *= -1.0
    b = np.abs(b)

    n_struct = 2 * n + m
    n_art = int(np.sum(flip))
    tableau = np.zeros((m, n_struct + n_art + 1))
    tableau[:, :n_struct] = lifted
    tableau[:, -1] = b
    basis: list[int] = []
    k = 0
    for i in range(m):
        if flip[i]:
            col = n_struct + k
            tableau[i, col] = 1.0
            basis.append(col)
            k += 1
        else:
            basis.append(2 * n + i)

    total = n_struct + n_art
    eligible = np.ones(total, dtype=bool)
    original = tableau.copy()

    if n_art:
        phase1 = np.zeros(total)
        phase1[n_struct:] = -1.0
        unbounded_col = _run_simplex(tableau, basis, phase1, eligible, max_iter, original)
        if unbounded_col is not None:  # pragma: no cover - phase 1 is bounded
            raise SolverFailure("phase-1 simplex reported unbounded")
        infeas = -sum(
            tableau[i, -1] for i in range(m) if basis[i] >= n_struct
        )
        if infeas < -FEASIBILITY_TOL:
            return LpOutcome(LpStatus.INFEASIBLE)
        # Drive any residual artificial variables out of the basis.
        for i in range(m):
            if basis[i] >= n_struct:
                pivots = np.nonzero(np.abs(tableau[i, :n_struct]) > RANK_TOL)[0]
                if pivots.size:
                    _pivot(tableau, basis, i, int(pivots[0]))
        eligible[n_struct:] = False

    cost = np.zeros(total)
    cost[:n] = program.objective
    cost[n : 2 * n] = -program.objective
    unbounded_col = _run_simplex(tableau, basis, cost, eligible, max_iter, original)

    def _point() -> np.ndarray:
        x = np.zeros(total)
        for i in range(m):
            x[basis[i]] = tableau[i, -1]
        return x[:n] - x[n : 2 * n]

    if unbounded_col is not None:
        direction = np.zeros(total)
        direction[unbounded_col] = 1.0
        for i in range(m):
            direction[basis[i]] = -tableau[i, unbounded_col]
        ray = direction[:n] - direction[n : 2 * n]
        return LpOutcome(LpStatus.UNBOUNDED, ray=ray)

    point = _point()
    return LpOutcome(
        LpStatus.OPTIMAL, point=point, value=float(program.objective @ point)
    )
