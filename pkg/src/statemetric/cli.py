"""Batch front end: parse JSON problem files, dispatch, emit deterministic reports.

Problem files follow the ``statemetric/1`` schema: a labelled point set, one
seminorm description (commutator operator, cost graph, resistance graph,
quotient, or metric table), named states and observables, and an optional
task list.  Output is a table (default), JSON, or CSV, with numbers printed
at a fixed significant-digit precision so documents are byte-stable.

Exit codes: 0 success (check violations are results, not errors), 1 for a
malformed problem file, 2 for a numerical failure, 3 for check violations
under --strict.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .engine import (
    MetricEngine,
    NoConvergenceError,
    metric_table,
    monge_kantorovich,
)
from .linalg import SolverFailure
from .properties import (
    check_lattice,
    check_leibniz,
    check_metric_axioms,
    check_weak_lattice,
)
from .recovery import compare
from .resistance import ConductanceGraph, effective_resistance, resistance_metric
from .seminorms import (
    CostGraph,
    DegenerateSeminormError,
    DiracOperator,
    DiracSpec,
    GraphLipSpec,
    MetricLipSpec,
    QuotientSpec,
    ResistanceSpec,
    SeminormSpec,
    evaluate,
)
from .spaces import CommObservable, FiniteSpace, MetricTable, ProbState

SCHEMA = "statemetric/1"
DEFAULT_CHECKS = ("lattice", "weak-lattice", "leibniz", "metric-axioms")

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_NUMERIC = 2
EXIT_STRICT = 3


class SchemaError(ValueError):
    """Problem-file validation failure; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class Problem:
    space: FiniteSpace
    spec: SeminormSpec
    states: dict[str, ProbState]
    observables: dict[str, CommObservable]
    tasks: list[dict]


def _expect(mapping, field: str, kind, path: str):
    if not isinstance(mapping, dict):
        raise SchemaError(path or "<root>", "expected an object")
    if field not in mapping:
        raise SchemaError(f"{path}{field}", "missing required field")
    value = mapping[field]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}{field}", f"expected {kind.__name__}")
    return value


def _number_list(value, length: int, path: str) -> list[float]:
    if not isinstance(value, list) or len(value) != length:
        raise SchemaError(path, f"expected a list of {length} numbers")
    out = []
    for i, x in enumerate(value):
        if not isinstance(x, (int, float)) or isinstance(x, bool):
            raise SchemaError(f"{path}[{i}]", "expected a number")
        out.append(float(x))
    return out


def _matrix(value, rows: int, cols: int, path: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise SchemaError(path, f"expected {rows} rows")
    return np.array(
        [_number_list(row, cols, f"{path}[{i}]") for i, row in enumerate(value)]
    )


def _edge_list(value, space: FiniteSpace, weight_name: str, path: str):
    if not isinstance(value, list) or not value:
        raise SchemaError(path, "expected a non-empty list of edges")
    edges = {}
    for i, entry in enumerate(value):
        if not isinstance(entry, list) or len(entry) != 3:
            raise SchemaError(
                f"{path}[{i}]", f"expected [label, label, {weight_name}]"
            )
        a, b, w = entry
        for label in (a, b):
            if label not in space.labels:
                raise SchemaError(f"{path}[{i}]", f"unknown point label {label!r}")
        if not isinstance(w, (int, float)) or isinstance(w, bool) or not w > 0:
            raise SchemaError(f"{path}[{i}]", f"{weight_name} must be positive")
        edges[(space.index(a), space.index(b))] = float(w)
    return edges


def _build_spec(payload, space: FiniteSpace) -> SeminormSpec:
    kind = _expect(payload, "kind", str, "seminorm.")
    try:
        if kind == "dirac":
            matrix = _expect(payload, "matrix", list, "seminorm.")
            m = len(matrix)
            re = _matrix(matrix, m, m, "seminorm.matrix")
            im = None
            if "matrix_im" in payload:
                im = _matrix(payload["matrix_im"], m, m, "seminorm.matrix_im")
            rep = None
            if "rep" in payload:
                rep_labels = payload["rep"]
                if not isinstance(rep_labels, list) or len(rep_labels) != m:
                    raise SchemaError("seminorm.rep", f"expected {m} point labels")
                for i, label in enumerate(rep_labels):
                    if label not in space.labels:
                        raise SchemaError(
                            f"seminorm.rep[{i}]", f"unknown point label {label!r}"
                        )
                rep = tuple(space.index(label) for label in rep_labels)
            return DiracSpec(DiracOperator(re, im, space=space, rep=rep))
        if kind == "graph":
            edges = _edge_list(_expect(payload, "edges", list, "seminorm."), space, "cost", "seminorm.edges")
            return GraphLipSpec(CostGraph(space, edges))
        if kind == "resistance":
            edges = _edge_list(_expect(payload, "edges", list, "seminorm."), space, "resistance", "seminorm.edges")
            return ResistanceSpec(ConductanceGraph(space, edges))
        if kind == "quotient":
            return QuotientSpec(space=space)
        if kind == "metric":
            table = _matrix(
                _expect(payload, "table", list, "seminorm."),
                space.n,
                space.n,
                "seminorm.table",
            )
            return MetricLipSpec(MetricTable(space, table))
    except SchemaError:
        raise
    except (ValueError, DegenerateSeminormError) as exc:
        raise SchemaError("seminorm", str(exc)) from exc
    raise SchemaError("seminorm.kind", f"unknown seminorm kind {kind!r}")


def _resolve(source: str) -> Path:
    path = Path(source)
    if path.exists():
        return path
    bundled = resources.files("statemetric").joinpath("fixtures")
    for candidate in (source, f"{source}.json"):
        target = bundled.joinpath(candidate)
        if target.is_file():
            return Path(str(target))
    raise SchemaError("<file>", f"no such problem file or bundled fixture: {source}")


def load_problem(source: str) -> Problem:
    path = _resolve(source)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("<file>", f"invalid JSON: {exc}") from exc
    schema = _expect(raw, "schema", str, "")
    if schema != SCHEMA:
        raise SchemaError("schema", f"expected {SCHEMA!r}, got {schema!r}")
    space_obj = _expect(raw, "space", dict, "")
    labels = _expect(space_obj, "labels", list, "space.")
    if not all(isinstance(x, str) for x in labels):
        raise SchemaError("space.labels", "labels must be strings")
    try:
        space = FiniteSpace(labels)
    except ValueError as exc:
        raise SchemaError("space.labels", str(exc)) from exc
    spec = _build_spec(_expect(raw, "seminorm", dict, ""), space)

    states = {}
    for name, weights in sorted(raw.get("states", {}).items()):
        values = _number_list(weights, space.n, f"states.{name}")
        try:
            states[name] = ProbState(space, values)
        except ValueError as exc:
            raise SchemaError(f"states.{name}", str(exc)) from exc
    observables = {}
    for name, values in sorted(raw.get("observables", {}).items()):
        observables[name] = CommObservable(
            space, _number_list(values, space.n, f"observables.{name}")
        )

    tasks = raw.get("tasks", [])
    if not isinstance(tasks, list):
        raise SchemaError("tasks", "expected a list")
    problem = Problem(space, spec, states, observables, list(tasks))
    _validate_tasks(problem)
    return problem


def _validate_tasks(problem: Problem) -> None:
    for i, task in enumerate(problem.tasks):
        if not isinstance(task, dict) or "op" not in task:
            raise SchemaError(f"tasks[{i}]", "expected an object with an 'op' field")
        op = task["op"]
        if op not in {"eval", "metric", "table", "mk", "recover", "resist", "check"}:
            raise SchemaError(f"tasks[{i}].op", f"unknown task op {op!r}")
        for j, pair in enumerate(task.get("pairs", [])):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or any(name not in problem.states for name in pair)
            ):
                raise SchemaError(
                    f"tasks[{i}].pairs[{j}]", "expected a pair of declared state names"
                )
        for j, name in enumerate(task.get("observables", [])):
            if name not in problem.observables:
                raise SchemaError(
                    f"tasks[{i}].observables[{j}]", f"unknown observable {name!r}"
                )
        for j, name in enumerate(task.get("checks", [])):
            if name not in DEFAULT_CHECKS:
                raise SchemaError(
                    f"tasks[{i}].checks[{j}]", f"unknown check {name!r}"
                )


# -- output rendering ---------------------------------------------------------


class Formatter:
    def __init__(self, precision: int):
        self.precision = precision

    def fmt(self, value) -> str:
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return f"{float(value):#.{self.precision}g}"
        return str(value)

    def jsonable(self, value):
        if isinstance(value, bool):
            return value
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            return float(f"{float(value):.{self.precision}g}")
        return value


def _render(blocks, fmt: Formatter, style: str, out) -> None:
    if style == "json":
        doc = {
            block["title"]: [
                {k: fmt.jsonable(v) for k, v in row.items()} for row in block["rows"]
            ]
            for block in blocks
        }
        json.dump(doc, out, indent=2, sort_keys=True)
        out.write("\n")
        return
    if style == "csv":
        writer = csv.writer(out, lineterminator="\n")
        for block in blocks:
            writer.writerow([block["title"]])
            writer.writerow(block["columns"])
            for row in block["rows"]:
                writer.writerow([fmt.fmt(row.get(c, "")) for c in block["columns"]])
        return
    for block in blocks:
        out.write(f"# {block['title']}\n")
        columns = block["columns"]
        rendered = [
            [fmt.fmt(row.get(c, "")) for c in columns] for row in block["rows"]
        ]
        widths = [
            max(len(c), *(len(r[i]) for r in rendered)) if rendered else len(c)
            for i, c in enumerate(columns)
        ]
        out.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
        for r in rendered:
            out.write("  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip() + "\n")
        out.write("\n")


# -- subcommands --------------------------------------------------------------


def _state_pairs(problem: Problem, op: str) -> list[tuple[str, str]]:
    declared = [t for t in problem.tasks if t["op"] == op and t.get("pairs")]
    if declared:
        return [tuple(p) for t in declared for p in t["pairs"]]
    names = sorted(problem.states)
    return [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]


def _observable_names(problem: Problem, op: str) -> list[str]:
    declared = [t for t in problem.tasks if t["op"] == op and t.get("observables")]
    if declared:
        return [n for t in declared for n in t["observables"]]
    return sorted(problem.observables)


def _run_eval(problem: Problem, args) -> list:
    rows = [
        {"observable": name, "seminorm": evaluate(problem.spec, problem.observables[name])}
        for name in _observable_names(problem, "eval")
    ]
    return [{"title": "seminorm values", "columns": ["observable", "seminorm"], "rows": rows}]


def _run_metric(problem: Problem, args) -> list:
    engine = MetricEngine(problem.spec)
    rows = []
    for left, right in _state_pairs(problem, "metric"):
        cert = engine.state_metric(problem.states[left], problem.states[right], args.tol)
        rows.append(
            {
                "left": left,
                "right": right,
                "distance": cert.value,
                "lower": cert.lower,
                "upper": cert.upper,
                "iterations": cert.iterations,
            }
        )
    columns = ["left", "right", "distance", "lower", "upper", "iterations"]
    return [{"title": "state metric", "columns": columns, "rows": rows}]


def _run_table(problem: Problem, args) -> list:
    table = metric_table(problem.spec, args.tol)
    labels = problem.space.labels
    rows = [
        {"x": labels[x], "y": labels[y], "distance": table.distances[x, y]}
        for x in range(len(labels))
        for y in range(x + 1, len(labels))
    ]
    return [{"title": "metric table", "columns": ["x", "y", "distance"], "rows": rows}]


def _run_mk(problem: Problem, args) -> list:
    if isinstance(problem.spec, GraphLipSpec):
        ground = problem.spec.graph
    elif isinstance(problem.spec, MetricLipSpec):
        ground = problem.spec.table
    else:
        raise SchemaError(
            "seminorm.kind", "transport distances need a graph or metric seminorm"
        )
    rows = []
    for left, right in _state_pairs(problem, "mk"):
        rows.append(
            {
                "left": left,
                "right": right,
                "distance": monge_kantorovich(
                    ground, problem.states[left], problem.states[right]
                ),
            }
        )
    return [{"title": "transport distance", "columns": ["left", "right", "distance"], "rows": rows}]


def _run_recover(problem: Problem, args) -> list:
    names = _observable_names(problem, "recover")
    report = compare(
        problem.spec,
        [problem.observables[n] for n in names],
        samples=args.samples,
        seed=args.seed,
        names=names,
    )
    rows = [
        {
            "observable": r.name,
            "seminorm": r.seminorm,
            "extreme": r.extreme if r.extreme is not None else "",
            "sampled": r.sampled,
            "extreme_insufficient": r.extreme_insufficient,
            "recovery_witnessed": r.recovery_witnessed,
        }
        for r in report.records
    ]
    columns = [
        "observable",
        "seminorm",
        "extreme",
        "sampled",
        "extreme_insufficient",
        "recovery_witnessed",
    ]
    return [{"title": "seminorm recovery", "columns": columns, "rows": rows}]


def _run_resist(problem: Problem, args) -> list:
    if not isinstance(problem.spec, ResistanceSpec):
        raise SchemaError("seminorm.kind", "resist needs a resistance seminorm")
    graph = problem.spec.graph
    labels = problem.space.labels
    point_rows = [
        {"x": labels[x], "y": labels[y], "resistance": effective_resistance(graph, x, y)}
        for x in range(len(labels))
        for y in range(x + 1, len(labels))
    ]
    blocks = [
        {
            "title": "effective resistance",
            "columns": ["x", "y", "resistance"],
            "rows": point_rows,
        }
    ]
    state_rows = [
        {
            "left": left,
            "right": right,
            "distance": resistance_metric(
                graph, problem.states[left], problem.states[right]
            ),
        }
        for left, right in _state_pairs(problem, "resist")
        if problem.states
    ]
    if state_rows:
        blocks.append(
            {
                "title": "measure metric",
                "columns": ["left", "right", "distance"],
                "rows": state_rows,
            }
        )
    return blocks


def _run_check(problem: Problem, args) -> list:
    requested = None
    if args.checks:
        requested = [c.strip() for c in args.checks.split(",") if c.strip()]
    else:
        declared = [t for t in problem.tasks if t["op"] == "check" and t.get("checks")]
        if declared:
            requested = [c for t in declared for c in t["checks"]]
    if requested is None:
        requested = list(DEFAULT_CHECKS)
    for name in requested:
        if name not in DEFAULT_CHECKS:
            raise SchemaError("--checks", f"unknown check {name!r}")

    obs = [problem.observables[n] for n in sorted(problem.observables)]
    obs_pairs = [(f, g) for i, f in enumerate(obs) for g in obs[i + 1 :]]
    reports = []
    for name in requested:
        if name == "lattice":
            reports.append(
                check_lattice(problem.spec, trials=args.trials, seed=args.seed, extra=obs_pairs)
            )
        elif name == "weak-lattice":
            reports.append(
                check_weak_lattice(
                    problem.spec,
                    trials=args.trials,
                    seed=args.seed,
                    extra=[(f,) for f in obs],
                )
            )
        elif name == "leibniz":
            reports.append(
                check_leibniz(problem.spec, trials=args.trials, seed=args.seed, extra=obs_pairs)
            )
        elif name == "metric-axioms":
            table = metric_table(problem.spec, args.tol)
            reports.append(
                check_metric_axioms(
                    table.distance, list(problem.space.labels), trials=args.trials, seed=args.seed
                )
            )
    summary = [
        {
            "check": r.name,
            "trials": r.trials,
            "executed": r.executed,
            "violations": len(r.violations),
            "status": "pass" if r.passed else "violated",
        }
        for r in reports
    ]
    blocks = [
        {
            "title": "checks",
            "columns": ["check", "trials", "executed", "violations", "status"],
            "rows": summary,
        }
    ]
    detail = []
    seen = set()
    for r in reports:
        for v in r.violations:
            row = {
                "check": r.name,
                "inputs": _summarize_inputs(v.inputs),
                "lhs": v.lhs,
                "rhs": v.rhs,
                "margin": v.margin,
            }
            key = (row["check"], row["inputs"], row["lhs"], row["rhs"])
            if key not in seen:
                seen.add(key)
                detail.append(row)
    if detail:
        blocks.append(
            {
                "title": "violations",
                "columns": ["check", "inputs", "lhs", "rhs", "margin"],
                "rows": detail,
            }
        )
    blocks[0]["any_violation"] = bool(detail)
    return blocks


def _summarize_inputs(inputs: tuple) -> str:
    parts = []
    for item in inputs:
        if isinstance(item, CommObservable):
            parts.append("(" + ",".join(f"{x:g}" for x in item.values) + ")")
        elif isinstance(item, ProbState):
            parts.append("[" + ",".join(f"{x:g}" for x in item.weights) + "]")
        else:
            parts.append(str(item))
    return " ".join(parts)


_RUNNERS = {
    "eval": _run_eval,
    "metric": _run_metric,
    "table": _run_table,
    "mk": _run_mk,
    "recover": _run_recover,
    "resist": _run_resist,
    "check": _run_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statemetric",
        description="Metrics on state spaces from Lipschitz seminorm descriptions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("eval", "seminorm values of the declared observables"),
        ("metric", "state-space distances with certificates"),
        ("table", "all-pairs point metric table"),
        ("mk", "transport (transshipment) distances"),
        ("recover", "seminorm recovery report"),
        ("resist", "effective resistance and measure metrics"),
        ("check", "inequality and metric-axiom checkers"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("problem", help="problem file path or bundled fixture name")
        p.add_argument("--tol", type=float, default=1e-7, help="engine tolerance")
        p.add_argument("--seed", type=int, default=0, help="sampling seed")
        p.add_argument("--samples", type=int, default=2000, help="recovery sample count")
        p.add_argument("--trials", type=int, default=200, help="checker trial count")
        p.add_argument(
            "--format", choices=("table", "json", "csv"), default="table", dest="fmt"
        )
        p.add_argument(
            "--precision", type=int, default=7, help="significant digits in output"
        )
        p.add_argument(
            "--strict",
            action="store_true",
            help="exit 3 when a check reports violations",
        )
        if name == "check":
            p.add_argument(
                "--checks",
                default=None,
                help="comma-separated subset of: " + ", ".join(DEFAULT_CHECKS),
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.checks = getattr(args, "checks", None)
    out = sys.stdout
    try:
        problem = load_problem(args.problem)
        blocks = _RUNNERS[args.command](problem, args)
    except SchemaError as exc:
        print(f"problem file error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NoConvergenceError as exc:
        print(
            f"numerical failure: {exc}",
            file=sys.stderr,
        )
        return EXIT_NUMERIC
    except SolverFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _render(blocks, Formatter(args.precision), args.fmt, out)
    if args.strict and any(block.get("any_violation") for block in blocks):
        return EXIT_STRICT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
