import itertools

import numpy as np
import pytest

from statemetric.engine import (
    MetricEngine,
    dual_norm,
    metric_table,
    monge_kantorovich,
    radius,
    state_metric,
    trace_distance,
)
from statemetric.linalg import HermMatrix
from statemetric.resistance import ConductanceGraph, spanning_tree_resistance
from statemetric.seminorms import (
    CostGraph,
    DiracSpec,
    GraphLipSpec,
    MetricLipSpec,
    QuotientSpec,
    ResistanceSpec,
    evaluate,
)
from statemetric.spaces import (
    CommObservable,
    DensityState,
    FiniteSpace,
    MetricTable,
    ProbState,
    ZeroSumVector,
    difference,
    pair,
    point_state,
    random_density,
    random_state,
)

from conftest import (
    random_cost_graph,
    shortest_path_matrix,
    three_point_dirac,
)

SQRT5 = np.sqrt(5.0)


def random_pair(space, rng):
    return random_state(space, rng), random_state(space, rng)


class TestThreePointDistances:
    def test_point_distances(self, example_spec):
        sp = example_spec.operator.space
        engine = MetricEngine(example_spec)
        d12 = engine.state_metric(point_state(sp, 0), point_state(sp, 1)).value
        d13 = engine.state_metric(point_state(sp, 0), point_state(sp, 2)).value
        d23 = engine.state_metric(point_state(sp, 1), point_state(sp, 2)).value
        assert d12 == pytest.approx(np.sqrt(1.25), abs=1e-6)
        assert d13 == pytest.approx(1.0, abs=1e-6)
        assert d23 == pytest.approx(0.5, abs=1e-6)

    def test_random_states_match_closed_form(self, example_spec):
        sp = example_spec.operator.space
        engine = MetricEngine(example_spec)
        rng = np.random.default_rng(0)
        for _ in range(30):
            mu, nu = random_pair(sp, rng)
            got = engine.state_metric(mu, nu).value
            want = np.hypot(mu.weights[0] - nu.weights[0], (mu.weights[1] - nu.weights[1]) / 2.0)
            assert got == pytest.approx(want, abs=1e-6)

    def test_equal_states(self, example_spec):
        sp = example_spec.operator.space
        mu = ProbState(sp, [0.3, 0.3, 0.4])
        assert state_metric(example_spec, mu, mu).value == pytest.approx(0.0, abs=1e-9)

    def test_quotient_matrix_orthogonal_pure_states(self):
        spec = QuotientSpec(dim=2)
        mu = DensityState(HermMatrix(np.diag([1.0, 0.0])))
        nu = DensityState(HermMatrix(np.diag([0.0, 1.0])))
        assert state_metric(spec, mu, nu).value == pytest.approx(2.0, abs=1e-6)


class TestDualNorm:
    def test_point_difference(self, example_spec):
        sp = example_spec.operator.space
        lam = difference(point_state(sp, 0), point_state(sp, 1))
        assert dual_norm(example_spec, lam).value == pytest.approx(
            np.sqrt(1.25), abs=1e-6
        )

    def test_zero_functional(self, example_spec):
        sp = example_spec.operator.space
        lam = ZeroSumVector(sp, [0.0, 0.0, 0.0])
        assert dual_norm(example_spec, lam).value == pytest.approx(0.0, abs=1e-9)

    def test_closed_form_on_zero_sum(self, example_spec):
        sp = example_spec.operator.space
        rng = np.random.default_rng(1)
        for _ in range(20):
            raw = rng.normal(size=3)
            raw -= raw.mean()
            lam = ZeroSumVector(sp, raw)
            want = np.hypot(raw[0], raw[1] / 2.0)
            assert dual_norm(example_spec, lam).value == pytest.approx(want, abs=1e-6)

    def test_matches_state_metric(self, example_spec):
        sp = example_spec.operator.space
        rng = np.random.default_rng(2)
        engine = MetricEngine(example_spec)
        for _ in range(20):
            mu, nu = random_pair(sp, rng)
            a = engine.state_metric(mu, nu).value
            b = engine.dual_norm(difference(mu, nu)).value
            assert a == pytest.approx(b, abs=2e-7)


class TestTraceDistance:
    def test_orthogonal_pure_states(self):
        mu = DensityState(HermMatrix(np.diag([1.0, 0.0])))
        nu = DensityState(HermMatrix(np.diag([0.0, 1.0])))
        assert trace_distance(mu, nu) == pytest.approx(2.0)

    def test_identical_states(self):
        rng = np.random.default_rng(3)
        mu = random_density(3, rng)
        assert trace_distance(mu, mu) == pytest.approx(0.0, abs=1e-12)

    def test_diagonal_mixture(self):
        mu = DensityState(HermMatrix(np.diag([0.75, 0.25])))
        nu = DensityState(HermMatrix(np.diag([0.25, 0.75])))
        assert trace_distance(mu, nu) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_quotient_metric_equals_trace_distance(self, n):
        spec = QuotientSpec(dim=n)
        engine = MetricEngine(spec)
        rng = np.random.default_rng(n)
        for _ in range(10):
            mu, nu = random_density(n, rng), random_density(n, rng)
            assert engine.state_metric(mu, nu).value == pytest.approx(
                trace_distance(mu, nu), abs=1e-6
            )


class TestMongeKantorovich:
    def test_two_point_table(self):
        sp = FiniteSpace(["a", "b"])
        table = MetricTable(sp, [[0.0, 3.0], [3.0, 0.0]])
        assert monge_kantorovich(table, point_state(sp, 0), point_state(sp, 1)) == 3.0

    def test_point_mass_lookup_is_exact(self):
        sp = FiniteSpace(["a", "b", "c"])
        d = np.array([[0.0, 1.1, 1.7], [1.1, 0.0, 0.9], [1.7, 0.9, 0.0]])
        table = MetricTable(sp, d)
        for x, y in itertools.combinations(range(3), 2):
            got = monge_kantorovich(table, point_state(sp, x), point_state(sp, y))
            assert got == d[x, y]  # bit-exact

    def test_lp_route_consistent_with_lookup(self):
        # exercise the generic LP on point masses through the engine
        sp = FiniteSpace(["a", "b", "c"])
        d = np.array([[0.0, 1.1, 1.7], [1.1, 0.0, 0.9], [1.7, 0.9, 0.0]])
        spec = MetricLipSpec(MetricTable(sp, d))
        engine = MetricEngine(spec)
        for x, y in itertools.combinations(range(3), 2):
            got = engine.state_metric(point_state(sp, x), point_state(sp, y)).value
            assert got == pytest.approx(d[x, y], abs=1e-9)

    def test_path_graph_point_masses(self):
        sp = FiniteSpace(["x1", "x2", "x3"])
        graph = CostGraph(sp, {(0, 1): 1.0, (1, 2): 1.0})
        assert monge_kantorovich(
            graph, point_state(sp, 0), point_state(sp, 2)
        ) == pytest.approx(2.0, abs=1e-9)

    def test_split_mass_hand_lp(self):
        sp = FiniteSpace(["a", "b"])
        table = MetricTable(sp, [[0.0, 3.0], [3.0, 0.0]])
        mu = ProbState(sp, [0.5, 0.5])
        nu = ProbState(sp, [0.0, 1.0])
        assert monge_kantorovich(table, mu, nu) == pytest.approx(1.5, abs=1e-9)

    def test_matches_shortest_path_on_random_graphs(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            graph = random_cost_graph(int(rng.integers(2, 8)), rng)
            oracle = shortest_path_matrix(graph)
            for x, y in itertools.combinations(range(graph.n), 2):
                got = monge_kantorovich(
                    graph, point_state(graph.space, x), point_state(graph.space, y)
                )
                assert got == pytest.approx(oracle[x, y], abs=1e-9)


class TestMetricTable:
    def test_three_point_dirac_table(self, example_spec):
        table = metric_table(example_spec)
        sp = example_spec.operator.space
        assert table.distance("p1", "p2") == pytest.approx(np.sqrt(1.25), abs=1e-6)
        assert table.distance("p1", "p3") == pytest.approx(1.0, abs=1e-6)
        assert table.distance("p2", "p3") == pytest.approx(0.5, abs=1e-6)

    def test_single_edge_graph(self):
        sp = FiniteSpace(["a", "b"])
        spec = GraphLipSpec(CostGraph(sp, {(0, 1): 2.0}))
        assert metric_table(spec).distance("a", "b") == pytest.approx(2.0)

    def test_resistance_triangle(self):
        sp = FiniteSpace(["a", "b", "c"])
        graph = ConductanceGraph(sp, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0})
        table = metric_table(ResistanceSpec(graph))
        for x, y in itertools.combinations(range(3), 2):
            assert table.distances[x, y] == pytest.approx(2 / 3, abs=1e-9)
            assert table.distances[x, y] == pytest.approx(
                spanning_tree_resistance(graph, x, y), abs=1e-9
            )

    def test_metric_lip_shortcut_is_exact(self):
        sp = FiniteSpace(["a", "b", "c"])
        d = np.array([[0.0, 1.3, 2.0], [1.3, 0.0, 0.8], [2.0, 0.8, 0.0]])
        spec = MetricLipSpec(MetricTable(sp, d))
        assert np.array_equal(metric_table(spec).distances, spec.table.distances)

    def test_cost_scaling(self):
        rng = np.random.default_rng(5)
        graph = random_cost_graph(4, rng)
        scaled = CostGraph(graph.space, {e: 2.5 * c for e, c in graph.costs.items()})
        base = metric_table(GraphLipSpec(graph)).distances
        big = metric_table(GraphLipSpec(scaled)).distances
        assert np.allclose(big, 2.5 * base, atol=1e-9)

    def test_relabeling_equivariance(self, example_spec):
        sp = example_spec.operator.space
        perm = [2, 0, 1]
        relabeled = FiniteSpace([sp.labels[i] for i in perm])
        op = example_spec.operator
        # permute the representation: Hilbert coordinate k now names point perm^-1
        inverse = np.argsort(perm)
        from statemetric.seminorms import DiracOperator, DiracSpec

        moved = DiracSpec(
            DiracOperator(
                op.re, op.im, space=relabeled, rep=tuple(int(inverse[k]) for k in op.rep)
            )
        )
        base = metric_table(example_spec)
        other = metric_table(moved)
        for x in range(3):
            for y in range(3):
                if x != y:
                    a = base.distance(sp.labels[x], sp.labels[y])
                    b = other.distance(sp.labels[x], sp.labels[y])
                    assert a == pytest.approx(b, abs=1e-6)

    def test_tables_are_valid_metrics(self):
        # MetricTable construction validates symmetry/positivity/triangle
        rng = np.random.default_rng(6)
        specs = [
            three_point_dirac(0.7, 3.1),
            GraphLipSpec(random_cost_graph(4, rng)),
            ResistanceSpec(
                ConductanceGraph(
                    FiniteSpace(["a", "b", "c", "d"]),
                    {(0, 1): 0.5, (1, 2): 1.5, (2, 3): 0.25, (0, 3): 2.0},
                )
            ),
            QuotientSpec(space=FiniteSpace(["a", "b", "c"])),
        ]
        for spec in specs:
            metric_table(spec)  # construction rejects non-metric tables


class TestCertificates:
    def test_bounds_and_witness(self, example_spec):
        sp = example_spec.operator.space
        rng = np.random.default_rng(7)
        engine = MetricEngine(example_spec)
        for _ in range(20):
            mu, nu = random_pair(sp, rng)
            cert = engine.state_metric(mu, nu, tol=1e-7)
            assert cert.lower <= cert.value <= cert.upper
            assert cert.upper - cert.lower <= 1e-7
            assert evaluate(example_spec, cert.witness) <= 1.0 + 2e-9
            achieved = abs(pair(difference(mu, nu), cert.witness))
            assert achieved == pytest.approx(cert.lower, abs=1e-9)

    def test_iteration_counts_reported(self, example_spec):
        sp = example_spec.operator.space
        cert = state_metric(example_spec, point_state(sp, 0), point_state(sp, 1))
        assert cert.iterations >= 1

    def test_rejects_nonpositive_tol(self, example_spec):
        sp = example_spec.operator.space
        with pytest.raises(ValueError):
            state_metric(example_spec, point_state(sp, 0), point_state(sp, 1), tol=0.0)


class TestRadius:
    def test_three_point_dirac(self, example_spec):
        assert radius(example_spec) == pytest.approx(np.sqrt(1.25) / 2, abs=1e-6)

    def test_matrix_quotient_is_one(self):
        assert radius(QuotientSpec(dim=3)) == 1.0

    def test_single_edge_graph(self):
        sp = FiniteSpace(["a", "b"])
        spec = GraphLipSpec(CostGraph(sp, {(0, 1): 2.0}))
        assert radius(spec) == pytest.approx(1.0)
