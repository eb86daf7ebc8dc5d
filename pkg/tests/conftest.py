"""Shared builders: canonical specs, random connected graphs, path-length oracle."""

import numpy as np
import pytest

from statemetric import (
    ConductanceGraph,
    CostGraph,
    DiracOperator,
    DiracSpec,
    FiniteSpace,
)


def three_point_dirac(alpha: float, beta: float) -> DiracSpec:
    """The two-parameter three-point commutator spec used throughout the tests.

    L(f) = sqrt(alpha^2 (f3-f1)^2 + beta^2 (f3-f2)^2), with point distances
    1/alpha, 1/beta, and sqrt(1/alpha^2 + 1/beta^2).
    """
    space = FiniteSpace(["p1", "p2", "p3"])
    matrix = [[0.0, 0.0, alpha], [0.0, 0.0, beta], [-alpha, -beta, 0.0]]
    return DiracSpec(DiracOperator(matrix, space=space))


def three_point_closed_form(alpha: float, beta: float, values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.hypot(alpha * (v[2] - v[0]), beta * (v[2] - v[1])))


def random_edges(n: int, rng: np.random.Generator, extra_prob: float = 0.4) -> dict:
    """Random connected edge set with log-uniform positive weights."""
    edges = {}
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i - 1]), int(order[i])
        edges[(min(a, b), max(a, b))] = float(np.exp(rng.uniform(-1.5, 1.5)))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in edges and rng.random() < extra_prob:
                edges[(a, b)] = float(np.exp(rng.uniform(-1.5, 1.5)))
    return edges


def random_cost_graph(n: int, rng: np.random.Generator) -> CostGraph:
    space = FiniteSpace([f"v{i}" for i in range(n)])
    return CostGraph(space, random_edges(n, rng))


def random_conductance_graph(n: int, rng: np.random.Generator) -> ConductanceGraph:
    space = FiniteSpace([f"v{i}" for i in range(n)])
    return ConductanceGraph(space, random_edges(n, rng))


def shortest_path_matrix(graph: CostGraph) -> np.ndarray:
    """Floyd-Warshall path-length distances; independent of the LP route."""
    n = graph.n
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for (a, b), cost in graph.costs.items():
        d[a, b] = d[b, a] = min(d[a, b], cost)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


@pytest.fixture
def example_spec() -> DiracSpec:
    return three_point_dirac(1.0, 2.0)
