import numpy as np
import pytest

from statemetric.engine import metric_table
from statemetric.linalg import HermMatrix
from statemetric.properties import (
    check_convex,
    check_lattice,
    check_leibniz,
    check_linear,
    check_metric_axioms,
    check_midpoint_balanced,
    check_midpoint_concave,
    check_weak_lattice,
    density_sampler,
    metric_function,
    norm_from_metric,
    simplex_sampler,
)
from statemetric.resistance import (
    ConductanceGraph,
    effective_resistance,
    frozen_leibniz_witness,
)
from statemetric.seminorms import (
    CostGraph,
    DiracOperator,
    DiracSpec,
    GraphLipSpec,
    MetricLipSpec,
    QuotientSpec,
    ResistanceSpec,
)
from statemetric.spaces import (
    CommObservable,
    FiniteSpace,
    MetricTable,
    ZeroSumVector,
    point_state,
)

from conftest import three_point_dirac

SQRT5 = np.sqrt(5.0)

WEAK_LATTICE_WITNESS_MARGIN = 0.1281037258183524


def four_point_witness_spec():
    sp = FiniteSpace(["x1", "x2", "x3", "x4"])
    matrix = [[0, 4, -1, 0], [-4, 0, 2, -2], [1, -2, 0, -4], [0, 2, 4, 0]]
    return DiracSpec(DiracOperator(matrix, space=sp))


def random_metric_table(n, rng):
    # shortest-path closure of random positive weights is always a metric
    raw = rng.uniform(0.5, 3.0, size=(n, n))
    d = (raw + raw.T) / 2
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                d[i, j] = min(d[i, j], d[i, k] + d[k, j])
    space = FiniteSpace([f"v{i}" for i in range(n)])
    return MetricTable(space, d)


class TestLattice:
    def test_metric_lip_always_passes(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            table = random_metric_table(int(rng.integers(2, 6)), rng)
            report = check_lattice(MetricLipSpec(table), trials=200, seed=1)
            assert report.passed

    def test_commutator_spec_violates(self, example_spec):
        report = check_lattice(example_spec, trials=0, seed=0)
        assert not report.passed
        margins = [v.margin for v in report.violations]
        assert any(abs(m - (SQRT5 - 2.0)) <= 1e-9 for m in margins)

    def test_resistance_report_is_deterministic(self):
        sp = FiniteSpace(["a", "b", "c"])
        spec = ResistanceSpec(
            ConductanceGraph(sp, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0})
        )
        first = check_lattice(spec, trials=100, seed=3)
        second = check_lattice(spec, trials=100, seed=3)
        assert first.passed == second.passed
        assert len(first.violations) == len(second.violations)

    def test_replay_reproduces_margin(self, example_spec):
        report = check_lattice(example_spec, trials=0, seed=0)
        for violation in report.violations:
            assert report.replay(violation) == pytest.approx(violation.margin, abs=1e-12)


class TestWeakLattice:
    def test_three_point_commutator_specs_pass(self):
        # empirical claim: clipping never increases the seminorm on 3 points
        rng = np.random.default_rng(1)
        for trial in range(50):
            matrix = rng.normal(size=(3, 3))
            sp = FiniteSpace(["a", "b", "c"])
            try:
                spec = DiracSpec(DiracOperator(matrix - matrix.T, space=sp))
            except Exception:
                continue
            report = check_weak_lattice(spec, trials=200, seed=trial)
            assert report.passed, f"violation at trial {trial}"

    def test_four_point_witness_fails(self):
        report = check_weak_lattice(four_point_witness_spec(), trials=0, seed=0)
        assert not report.passed
        margins = [v.margin for v in report.violations]
        assert any(abs(m - WEAK_LATTICE_WITNESS_MARGIN) <= 1e-9 for m in margins)

    def test_metric_lip_passes(self):
        rng = np.random.default_rng(2)
        table = random_metric_table(4, rng)
        assert check_weak_lattice(MetricLipSpec(table), trials=200, seed=0).passed


class TestLeibniz:
    def test_commutator_specs_satisfy(self, example_spec):
        assert check_leibniz(example_spec, trials=300, seed=0).passed
        assert check_leibniz(four_point_witness_spec(), trials=200, seed=1).passed

    def test_metric_lip_satisfies(self):
        rng = np.random.default_rng(3)
        table = random_metric_table(4, rng)
        assert check_leibniz(MetricLipSpec(table), trials=200, seed=0).passed

    def test_resistance_fails_on_frozen_witness(self):
        witness = frozen_leibniz_witness()
        spec = ResistanceSpec(witness.graph)
        space = witness.graph.space
        extra = [
            (CommObservable(space, witness.f), CommObservable(space, witness.g))
        ]
        report = check_leibniz(spec, trials=0, seed=0, extra=extra)
        assert not report.passed
        assert report.violations[0].margin == pytest.approx(2.585, abs=1e-9)

    def test_matrix_quotient_jordan_product(self):
        report = check_leibniz(QuotientSpec(dim=3), trials=100, seed=0)
        assert report.note == "jordan-product"
        assert report.passed


class TestMetricAxioms:
    def test_metric_table_passes(self, example_spec):
        table = metric_table(example_spec)
        labels = list(table.space.labels)
        report = check_metric_axioms(table.distance, labels, trials=200, seed=0)
        assert report.passed

    def test_squared_resistance_violates_triangle(self):
        sp = FiniteSpace(["a", "b", "c"])
        graph = ConductanceGraph(sp, {(0, 1): 1.0, (1, 2): 1.0})

        def d(x, y):
            if x == y:
                return 0.0
            return effective_resistance(graph, sp.index(x), sp.index(y)) ** 2

        report = check_metric_axioms(d, list(sp.labels), trials=100, seed=0)
        assert not report.passed
        assert any(v.inputs[0] == "triangle" for v in report.violations)

    def test_zero_distance_fails_positivity(self):
        report = check_metric_axioms(
            lambda x, y: 0.0, ["a", "b", "c"], trials=50, seed=0
        )
        assert not report.passed
        assert any(v.inputs[0] == "positivity" for v in report.violations)


def metric_zoo():
    """(name, metric function, sampler) for each built family."""
    cases = []
    dirac = three_point_dirac(1.0, 2.0)
    cases.append(
        ("dirac", metric_function(dirac, tol=1e-8), simplex_sampler(dirac.operator.space))
    )
    sp = FiniteSpace(["a", "b", "c"])
    graph_spec = GraphLipSpec(CostGraph(sp, {(0, 1): 1.0, (1, 2): 0.5}))
    cases.append(("graph", metric_function(graph_spec), simplex_sampler(sp)))
    res_spec = ResistanceSpec(
        ConductanceGraph(sp, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 2.0})
    )
    cases.append(("resistance", metric_function(res_spec, tol=1e-8), simplex_sampler(sp)))
    cases.append(("quotient", metric_function(QuotientSpec(space=sp)), simplex_sampler(sp)))
    table = MetricTable(sp, [[0, 1, 1.5], [1, 0, 1], [1.5, 1, 0]])
    cases.append(("metric", metric_function(MetricLipSpec(table)), simplex_sampler(sp)))
    cases.append(
        ("quotient-matrix", metric_function(QuotientSpec(dim=2), tol=1e-8), density_sampler(2))
    )
    return cases


class TestNormMetricAxioms:
    @pytest.mark.parametrize("case_idx", range(6))
    def test_built_metrics_pass_all_four(self, case_idx):
        name, d, sampler = metric_zoo()[case_idx]
        for checker in (check_convex, check_midpoint_balanced, check_midpoint_concave, check_linear):
            report = checker(d, sampler, trials=60, seed=0)
            assert report.passed, f"{name}: {checker.__name__} violations {report.violations[:1]}"
            if checker in (check_convex, check_midpoint_concave):
                assert report.executed == 60

    def test_vacuous_pass_when_all_infeasible(self):
        sp = FiniteSpace(["a", "b", "c"])
        counter = {"k": 0}

        def cycling_point_sampler(rng):
            counter["k"] += 1
            return point_state(sp, counter["k"] % 3)

        d = metric_function(QuotientSpec(space=sp))
        report = check_midpoint_balanced(d, cycling_point_sampler, trials=30, seed=0)
        assert report.executed == 0
        assert report.passed


def perturbed_metric_fixture():
    """A seeded non-norm perturbation of a built metric (frozen fixture)."""
    sp = FiniteSpace(["a", "b", "c"])
    base = metric_function(GraphLipSpec(CostGraph(sp, {(0, 1): 1.0, (1, 2): 0.5})))
    rng = np.random.default_rng(7)
    direction = rng.normal(size=3)

    def bump(mu):
        return float(np.sin(3.0 * direction @ mu.weights))

    def d(mu, nu):
        if np.array_equal(mu.weights, nu.weights):
            return 0.0
        return base(mu, nu) + 0.1 * (1.5 + bump(mu) * bump(nu))

    return d, simplex_sampler(sp), sp


class TestPerturbedFixture:
    def test_some_checker_fails(self):
        d, sampler, _ = perturbed_metric_fixture()
        results = [
            checker(d, sampler, trials=200, seed=0).passed
            for checker in (
                check_convex,
                check_midpoint_balanced,
                check_midpoint_concave,
                check_linear,
            )
        ]
        assert not all(results)

    def test_norm_reconstruction_reports_discrepancy(self):
        d, sampler, _ = perturbed_metric_fixture()
        recon = norm_from_metric(d, sampler, trials=200, seed=0)
        assert recon.max_discrepancy > 1e-3


class TestNormFromMetric:
    def test_built_metric_is_well_defined(self, example_spec):
        d = metric_function(example_spec, tol=1e-8)
        sampler = simplex_sampler(example_spec.operator.space)
        recon = norm_from_metric(d, sampler, trials=150, seed=0)
        assert recon.executed > 0
        assert recon.max_discrepancy <= 1e-9

    def test_point_difference_value(self, example_spec):
        sp = example_spec.operator.space
        d = metric_function(example_spec, tol=1e-9)
        lam = ZeroSumVector(sp, [1.0, -1.0, 0.0])
        recon = norm_from_metric(d, simplex_sampler(sp), [lam], trials=10, seed=0)
        assert recon.values[0] == pytest.approx(np.sqrt(1.25), abs=1e-6)

    def test_zero_functional(self, example_spec):
        sp = example_spec.operator.space
        d = metric_function(example_spec)
        lam = ZeroSumVector(sp, [0.0, 0.0, 0.0])
        recon = norm_from_metric(d, simplex_sampler(sp), [lam], trials=5, seed=0)
        assert recon.values[0] == 0.0

    def test_linear_pass_implies_well_defined(self):
        # the two §-style properties agree on the same sample scale
        sp = FiniteSpace(["a", "b", "c"])
        d = metric_function(QuotientSpec(space=sp))
        sampler = simplex_sampler(sp)
        linear = check_linear(d, sampler, trials=300, seed=0)
        assert linear.passed and linear.executed >= 100
        recon = norm_from_metric(d, sampler, trials=300, seed=0)
        assert recon.max_discrepancy <= 1e-9

    def test_matrix_flavor_values(self):
        d = metric_function(QuotientSpec(dim=2), tol=1e-8)
        from statemetric.spaces import TracelessMatrix

        lam = TracelessMatrix(HermMatrix(np.diag([1.0, -1.0])))
        recon = norm_from_metric(d, density_sampler(2), [lam], trials=20, seed=0)
        # trace norm of diag(1, -1) is 2
        assert recon.values[0] == pytest.approx(2.0, abs=1e-6)
