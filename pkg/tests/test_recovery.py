import numpy as np
import pytest

from statemetric.engine import MetricEngine, metric_table
from statemetric.recovery import (
    compare,
    extreme_seminorm,
    sampled_recovered_seminorm,
)
from statemetric.seminorms import (
    CostGraph,
    GraphLipSpec,
    MetricLipSpec,
    QuotientSpec,
    ResistanceSpec,
    evaluate,
)
from statemetric.resistance import ConductanceGraph
from statemetric.spaces import CommObservable, FiniteSpace, MetricTable

from conftest import three_point_dirac

SQRT5 = np.sqrt(5.0)


@pytest.fixture
def join_observable(example_spec):
    return CommObservable(example_spec.operator.space, [1.0, 1.0, 0.0])


class TestExtremeSeminorm:
    def test_one_hot(self, example_spec):
        sp = example_spec.operator.space
        f = CommObservable(sp, [1, 0, 0])
        table = metric_table(example_spec, tol=1e-10)
        assert extreme_seminorm(example_spec, f, table) == pytest.approx(1.0, abs=1e-8)

    def test_join_is_two(self, example_spec, join_observable):
        table = metric_table(example_spec, tol=1e-10)
        value = extreme_seminorm(example_spec, join_observable, table)
        assert value == pytest.approx(2.0, abs=1e-8)
        # strictly below the seminorm itself
        assert value < evaluate(example_spec, join_observable) - 1e-6

    def test_constant(self, example_spec):
        sp = example_spec.operator.space
        f = CommObservable(sp, [2, 2, 2])
        assert extreme_seminorm(example_spec, f) == 0.0

    def test_metric_lip_recovers_exactly(self):
        sp = FiniteSpace(["a", "b", "c"])
        table = MetricTable(sp, [[0, 1, 1.5], [1, 0, 1], [1.5, 1, 0]])
        spec = MetricLipSpec(table)
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = CommObservable(sp, rng.normal(size=3))
            assert extreme_seminorm(spec, f) == evaluate(spec, f)


class TestSampledRecovery:
    def test_witnesses_full_seminorm(self, example_spec, join_observable):
        value = sampled_recovered_seminorm(example_spec, join_observable, 2000, seed=0)
        assert value >= 0.95 * SQRT5
        assert value <= SQRT5 + 1e-9

    def test_constant_is_zero(self, example_spec):
        sp = example_spec.operator.space
        f = CommObservable(sp, [1.5, 1.5, 1.5])
        assert sampled_recovered_seminorm(example_spec, f, 10, seed=0) == 0.0

    def test_single_edge_graph_exact(self):
        sp = FiniteSpace(["a", "b"])
        spec = GraphLipSpec(CostGraph(sp, {(0, 1): 2.0}))
        f = CommObservable(sp, [1.0, 0.0])
        got = sampled_recovered_seminorm(spec, f, 10, seed=0)
        assert got == pytest.approx(evaluate(spec, f), abs=1e-12)

    def test_monotone_in_samples(self, example_spec, join_observable):
        values = [
            sampled_recovered_seminorm(example_spec, join_observable, s, seed=0)
            for s in (5, 10, 25, 60, 130, 260)
        ]
        for a, b in zip(values, values[1:]):
            assert b >= a - 1e-12

    @pytest.mark.parametrize(
        "spec_builder",
        [
            lambda: three_point_dirac(0.8, 2.5),
            lambda: GraphLipSpec(
                CostGraph(FiniteSpace(["a", "b", "c"]), {(0, 1): 1.0, (1, 2): 0.5})
            ),
            lambda: ResistanceSpec(
                ConductanceGraph(
                    FiniteSpace(["a", "b", "c"]), {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0}
                )
            ),
            lambda: QuotientSpec(space=FiniteSpace(["a", "b", "c"])),
        ],
    )
    def test_sandwich(self, spec_builder):
        spec = spec_builder()
        from statemetric.seminorms import spec_space

        sp = spec_space(spec)
        rng = np.random.default_rng(1)
        engine = MetricEngine(spec)
        table = metric_table(spec, tol=1e-9)
        for _ in range(5):
            f = CommObservable(sp, rng.normal(size=sp.n))
            value = evaluate(spec, f)
            extreme = extreme_seminorm(spec, f, table)
            sampled = sampled_recovered_seminorm(spec, f, 60, seed=2, engine=engine)
            assert extreme <= sampled + 1e-9
            assert sampled <= value + 1e-9

    def test_matrix_flavor_sandwich(self):
        spec = QuotientSpec(dim=2)
        rng = np.random.default_rng(3)
        engine = MetricEngine(spec)
        from statemetric.linalg import HermMatrix
        from statemetric.spaces import MatObservable

        for _ in range(3):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            obs = MatObservable(HermMatrix.from_complex((a + a.conj().T) / 2))
            sampled = sampled_recovered_seminorm(spec, obs, 40, seed=4, engine=engine)
            assert sampled <= evaluate(spec, obs) + 1e-9

    def test_rejects_zero_samples(self, example_spec, join_observable):
        with pytest.raises(ValueError):
            sampled_recovered_seminorm(example_spec, join_observable, 0, seed=0)


class TestCompare:
    def test_example_suite(self, example_spec):
        sp = example_spec.operator.space
        observables = [
            CommObservable(sp, [1, 0, 0]),
            CommObservable(sp, [0, 1, 0]),
            CommObservable(sp, [1, 1, 0]),
        ]
        report = compare(
            example_spec, observables, samples=600, seed=0, names=["f", "g", "fvg"]
        )
        by_name = {r.name: r for r in report.records}
        assert by_name["fvg"].extreme_insufficient
        assert not by_name["f"].extreme_insufficient
        assert not by_name["g"].extreme_insufficient
        for record in report.records:
            assert record.recovery_witnessed

    def test_quotient_spec_sandwich_only(self):
        sp = FiniteSpace(["a", "b", "c"])
        spec = QuotientSpec(space=sp)
        rng = np.random.default_rng(5)
        observables = [CommObservable(sp, rng.normal(size=3)) for _ in range(3)]
        report = compare(spec, observables, samples=200, seed=0)
        for record in report.records:
            assert record.extreme <= record.seminorm + 1e-9
            assert record.sampled <= record.seminorm + 1e-9
            assert record.recovery_witnessed

    def test_empty_list(self, example_spec):
        report = compare(example_spec, [], samples=10, seed=0)
        assert report.records == []
