"""Command-line front end.

Every command reads declared input files, writes its artifacts under
--out, and exits 0 on success, 1 on domain errors, 2 when a validation
or gating run found failures (the report is still written), and 64 on
usage errors. Output is byte-deterministic for identical inputs: no
clocks, no unseeded randomness, canonical serialization throughout.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import sbafile
from .dynamics import (
    MethodGrid,
    MethodParams,
    TraceConfig,
    apply_update,
    history_trace,
)
from .errors import EngineError, UsageError
from .evaluation import (
    DominanceCriterion,
    EvaluationConfig,
    ScenarioSet,
    dominance_graph,
    evaluation_matrix,
    pareto_frontier,
)
from .ingest import (
    ACCEPTED,
    GateVerdict,
    Manifest,
    REJECTED,
    build_changeset,
    gate_record,
    parse_record,
)
from .model import AssessmentState, ChangeSet, RevisionPolicy
from .sbafile import content_digest
from .solve import DecisionConfig, backward_induct, mlp, mrp_under_uncertainty
from .space import (
    DistanceSpec,
    SweepPoint,
    component_discrepancies,
    encode_tree,
    PSI_KINDS,
    bundle_distance,
    robustness_sweep,
)
from .trees import Bundle, GenerationParams, ScenarioTree, generate_tree, to_dot
from .validation import AxiomConfig, validate_assessment_state

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_FINDINGS = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse contract
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return ""
    return f"{x:.12g}"


def _load(path: str, expected: type, what: str):
    try:
        obj = sbafile.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    if type(obj) is not expected:
        raise UsageError(
            f"{path} holds a {type(obj).__name__}, but {what} needs a "
            f"{expected.__name__}")
    return obj


def _load_any(path: str, kinds: tuple[type, ...], what: str):
    try:
        obj = sbafile.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    if type(obj) not in kinds:
        names = "/".join(k.__name__ for k in kinds)
        raise UsageError(
            f"{path} holds a {type(obj).__name__}, but {what} needs "
            f"one of {names}")
    return obj


def _emit(out: str, name: str, text: str) -> Path:
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")
    return path


def _emit_json(out: str, name: str, payload) -> Path:
    return _emit(out, name, json.dumps(
        sbafile.to_jsonable(payload), sort_keys=True, indent=2,
        ensure_ascii=False) + "\n")


def _emit_obj(out: str, name: str, obj) -> Path:
    return _emit(out, name, sbafile.dumps_canonical(obj))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    db = _load(args.db, AssessmentState, "validate")
    severities = []
    for item in args.severity:
        code, _, level = item.partition("=")
        if not code or not level:
            raise UsageError(
                f"--severity takes CODE=LEVEL, got {item!r}")
        severities.append((code, level))
    config = AxiomConfig(severities=tuple(severities),
                         skip=tuple(args.skip))
    report = validate_assessment_state(db, config)

    lines = [f"validation of {args.db} (stage {db.stage})"]
    for f in report.findings:
        where = " ".join(f.subjects)
        lines.append(f"{f.severity.upper():7s} {f.code:8s} "
                     f"{where + ': ' if where else ''}{f.message}")
    counts = report.counts
    lines.append("counts: " + (", ".join(
        f"{k}={counts[k]}" for k in sorted(counts)) or "none"))
    lines.append(f"result: {'ok' if report.ok else 'failing'}")
    _emit(args.out, "validation_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "validation_report.json", report)
    return EXIT_OK if report.ok else EXIT_FINDINGS


def _cmd_gen(args) -> int:
    db = _load(args.db, AssessmentState, "gen")
    params = _load(args.params, GenerationParams, "gen")
    tree = generate_tree(db, params)
    _emit_obj(args.out, f"tree_{tree.id}.sba", tree)
    if args.dot:
        _emit(args.out, f"tree_{tree.id}.dot", to_dot(tree))
    print(f"tree {tree.id}: {len(tree.positions)} positions, "
          f"{len(tree.leaves)} leaves, digest {content_digest(tree)[:12]}")
    return EXIT_OK


def _path_display(tree: ScenarioTree, edge_ids: Sequence[str]) -> str:
    return ", ".join(
        tree.edge_by_id[e].label.display() for e in edge_ids)


def _cmd_mrp(args) -> int:
    tree = _load(args.tree, ScenarioTree, "mrp")
    config = (_load(args.config, DecisionConfig, "mrp")
              if args.config else None)
    if config is None or config.rule == "strict_preference":
        result = backward_induct(tree)
    else:
        result = mrp_under_uncertainty(
            tree, config.utility_table(), config.decision_rule(),
            config.world_states)
    lines = [f"most rational path of {tree.id}",
             f"path: [{_path_display(tree, result.path)}]",
             f"outcome: {result.outcome_leaf}"]
    for pid, eid in result.policy.decision_choice:
        lines.append(
            f"choice at {pid}: "
            f"{tree.edge_by_id[eid].label.display()} ({eid})")
    _emit(args.out, "mrp_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "mrp_report.json", result)
    if args.dot:
        _emit(args.out, f"mrp_{tree.id}.dot",
              to_dot(tree, mrp_edges=frozenset(result.path)))
    return EXIT_OK


def _cmd_mlp(args) -> int:
    tree = _load(args.tree, ScenarioTree, "mlp")
    result = mlp(tree, tiebreak=args.tiebreak)
    lines = [f"most likely path of {tree.id}"]
    for p in result.paths:
        lines.append(f"path: [{_path_display(tree, p)}]")
    lines.append(f"L = {_fmt(result.value)}")
    _emit(args.out, "mlp_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "mlp_report.json", result)
    if args.dot:
        _emit(args.out, f"mlp_{tree.id}.dot",
              to_dot(tree, mlp_edges=frozenset(result.path)))
    return EXIT_OK


def _cmd_distance(args) -> int:
    spec = _load(args.spec, DistanceSpec, "distance")
    a = _load_any(args.a, (ScenarioTree, Bundle), "distance")
    b = _load_any(args.b, (ScenarioTree, Bundle), "distance")
    if type(a) is not type(b):
        raise UsageError("distance compares two trees or two bundles, "
                         "not a mixture")
    lines = [f"distance between {args.a} and {args.b}"]
    if isinstance(a, ScenarioTree):
        if a.stage != b.stage:
            raise UsageError(
                f"trees are from different stages ({a.stage} vs "
                f"{b.stage}); the stage distance does not compare "
                "across time")
        parts = component_discrepancies(
            encode_tree(a, spec.encoding), encode_tree(b, spec.encoding),
            spec)
        total = 0.0
        for name, raw, weight in parts:
            total += weight * raw
            lines.append(f"component {name}: {_fmt(raw)} "
                         f"(weight {_fmt(weight)})")
        payload = {"components": [
            {"name": n, "discrepancy": r, "weight": w}
            for n, r, w in parts], "distance": total}
    else:
        total = bundle_distance(a, b, spec)
        payload = {"distance": total}
    lines.append(f"distance = {_fmt(total)}")
    _emit(args.out, "distance_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "distance_report.json", payload)
    return EXIT_OK


def _matrix_csv(matrix) -> str:
    buf = io.StringIO()
    buf.write(",".join(["row"] + list(matrix.columns)) + "\n")
    for label, values in matrix.rows:
        buf.write(",".join([label] + [_fmt(v) for v in values]) + "\n")
    return buf.getvalue()


def _dominance_dot(graph) -> str:
    lines = ["digraph dominance {"]
    for n in graph.nodes:
        lines.append(f'  "{n}";')
    for a, b in graph.edges:
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _cmd_evaluate(args) -> int:
    scenario_set = _load(args.scenarios, ScenarioSet, "evaluate")
    config = _load(args.config, EvaluationConfig, "evaluate")
    matrix = evaluation_matrix(scenario_set, config)
    _emit(args.out, "evaluation_matrix.csv", _matrix_csv(matrix))

    lines = [f"evaluation of {len(matrix.columns)} scenarios, "
             f"{len(matrix.rows)} value rows"]
    payload: dict = {"columns": list(matrix.columns),
                     "rows": sbafile.to_jsonable(matrix.rows)}
    if args.pareto:
        frontier = pareto_frontier(
            scenario_set, config,
            entities=args.entities if args.entities else None)
        lines.append("frontier: {" + ", ".join(frontier.frontier) + "}")
        if frontier.excluded:
            lines.append("excluded (unknown utilities): "
                         + ", ".join(frontier.excluded))
        payload["frontier"] = sbafile.to_jsonable(frontier)
    if args.dominance:
        criterion = DominanceCriterion(
            kind=args.dominance, entity=args.dominance_entity,
            coalition=args.dominance_coalition)
        graph = dominance_graph(scenario_set, config, criterion)
        for a, b in graph.edges:
            lines.append(f"dominates: {a} > {b}")
        if graph.cycles:
            lines.append(f"cycles: {len(graph.cycles)}")
        payload["dominance"] = sbafile.to_jsonable(graph)
        _emit(args.out, "dominance_graph.dot", _dominance_dot(graph))
    _emit(args.out, "evaluation_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "evaluation_report.json", payload)
    return EXIT_OK


def _cmd_update(args) -> int:
    db = _load(args.db, AssessmentState, "update")
    changeset = _load(args.changeset, ChangeSet, "update")
    nxt, log = apply_update(db, changeset)
    _emit_obj(args.out, "state_next.sba", nxt)
    lines = [f"update: stage {log.from_stage} -> {log.to_stage}",
             f"predecessor digest: {log.history_ref}"]
    for d in log.dispositions:
        reason = f" ({d.reason})" if d.reason else ""
        lines.append(f"record {d.record_index}: {d.status}{reason}")
    lines.extend(f"conflict: {c}" for c in log.conflicts)
    lines.extend(f"event: {n}" for n in log.event_notes)
    for oid, before, after in log.feasibility_changes:
        lines.append(f"feasibility of {oid}: {before} -> {after}")
    _emit(args.out, "update_log.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "update_log.json", log)
    return EXIT_OK


def _sweep_points(grid: MethodGrid,
                  fixed_trees: bool) -> tuple[SweepPoint, ...]:
    points = []
    for entry in grid.entries:
        if fixed_trees:
            generation = None
        else:
            if len(entry.generation) != 1:
                raise UsageError(
                    f"method {entry.name!r} declares "
                    f"{len(entry.generation)} generation settings; "
                    "state-based sweeps take exactly one per point")
            generation = entry.generation[0]
        points.append(SweepPoint(
            label=entry.name, generation=generation,
            selection_rule=entry.selection_rule, k=entry.k))
    return tuple(points)


def _cmd_sweep(args) -> int:
    grid = _load(args.grid, MethodGrid, "sweep")
    spec = _load(args.spec, DistanceSpec, "sweep")
    trees = tuple(
        _load(p, ScenarioTree, "sweep") for p in args.tree) or None
    db = _load(args.db, AssessmentState, "sweep") if args.db else None
    if db is None and trees is None:
        raise UsageError("sweep needs a state (--db) or fixed trees "
                         "(--tree)")
    evaluation = None
    if args.scenarios or args.eval_config:
        if not (args.scenarios and args.eval_config):
            raise UsageError("--scenarios and --eval-config go together")
        evaluation = (
            _load(args.scenarios, ScenarioSet, "sweep"),
            _load(args.eval_config, EvaluationConfig, "sweep"))
    report = robustness_sweep(
        db, _sweep_points(grid, trees is not None), args.psi, spec,
        trees=trees, evaluation=evaluation, tolerance=args.tolerance)
    lines = [f"sweep over {len(report.points)} method points, "
             f"functional {report.psi}"]
    for point in report.points:
        lines.append(f"point {point.label}: trees "
                     f"[{', '.join(point.tree_ids)}] -> "
                     f"{json.dumps(sbafile.to_jsonable(point.psi_value))}")
    for a, b, d in report.cross_distances:
        lines.append(f"bundle distance {a} vs {b}: {_fmt(d)}")
    lines.append("output invariant across methods: "
                 + ("yes" if report.psi_invariant else "no"))
    _emit(args.out, "sweep_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "sweep_report.json", report)
    return EXIT_OK


def _cmd_trace(args) -> int:
    states = tuple(
        _load(p, AssessmentState, "trace") for p in args.state)
    config = (_load(args.config, TraceConfig, "trace")
              if args.config else TraceConfig())
    report = history_trace(states, realized=config.realized,
                           method=config.method)
    lines = [f"history chain over {len(states)} states: intact"]
    for stage, digest in report.chain:
        lines.append(f"stage {stage}: {digest}")
    for entry in report.retrodiction:
        verdict = "offered" if entry.admissible else "NOT OFFERED"
        lines.append(f"realized at stage {entry.stage}: {entry.label} "
                     f"({verdict})")
    if report.retrodiction:
        lines.append("all realized labels offered: "
                     + ("yes" if report.all_admissible else "no"))
    _emit(args.out, "trace_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "trace_report.json", report)
    return EXIT_OK


def _cmd_ingest(args) -> int:
    db = _load(args.db, AssessmentState, "ingest")
    manifest = (_load(args.manifest, Manifest, "ingest")
                if args.manifest else None)
    try:
        text = Path(args.records).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.records}: {exc}")

    records = []
    verdicts: list[GateVerdict] = []
    numbers: list[int] = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        numbers.append(n)
        try:
            raw = json.loads(line)
        except ValueError as exc:
            verdicts.append(GateVerdict(
                REJECTED, ("schema_validity",),
                (f"not valid structured text: {exc}",)))
            records.append(None)
            continue
        try:
            record = parse_record(raw)
        except EngineError as exc:
            verdicts.append(GateVerdict(
                REJECTED, ("schema_validity",), (str(exc),)))
            records.append(None)
            continue
        records.append(record)
        verdicts.append(gate_record(record, db))

    lines = [f"gating {len(verdicts)} records against {args.db}"]
    for n, verdict in zip(numbers, verdicts):
        note = ""
        if verdict.failed_gates:
            note = (" [" + ", ".join(verdict.failed_gates) + "] "
                    + "; ".join(verdict.reasons))
        lines.append(f"line {n}: {verdict.verdict}{note}")
    accepted = [r for r, v in zip(records, verdicts)
                if v.verdict == ACCEPTED]
    counts: dict[str, int] = {}
    for v in verdicts:
        counts[v.verdict] = counts.get(v.verdict, 0) + 1
    lines.append("counts: " + (", ".join(
        f"{k}={counts[k]}" for k in sorted(counts)) or "none"))
    _emit(args.out, "gate_report.txt", "\n".join(lines) + "\n")
    _emit_json(args.out, "gate_report.json",
               {"lines": numbers, "verdicts": verdicts})

    if not accepted:
        print("no records accepted; changeset not written",
              file=sys.stderr)
        return EXIT_FINDINGS
    changeset = build_changeset(
        accepted, None, args.trigger,
        revision_policy=RevisionPolicy(args.policy),
        manifest=manifest, db=db)
    _emit_obj(args.out, "changeset.sba", changeset)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(
        prog="scenariokit",
        description="Stage-indexed scenario analysis: validate states, "
                    "grow and solve scenario trees, measure distances, "
                    "evaluate outcomes, and replay update histories.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def common(p):
        p.add_argument("--out", default=".",
                       help="directory for artifacts (default: .)")

    p = sub.add_parser("validate",
                       help="structural and coherence checks on a state")
    p.add_argument("db", help="assessment state file")
    p.add_argument("--severity", action="append", default=[],
                   metavar="CODE=LEVEL",
                   help="override a check's severity, e.g. A5=error")
    p.add_argument("--skip", action="append", default=[], metavar="CODE",
                   help="skip a check by code")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gen", help="grow a scenario tree from a state")
    p.add_argument("db")
    p.add_argument("--params", required=True,
                   help="generation parameters file")
    p.add_argument("--dot", action="store_true",
                   help="also write a DOT rendering")
    common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("mrp",
                       help="most rational path by backward induction")
    p.add_argument("tree")
    p.add_argument("--config",
                   help="decision config file (rules beyond strict "
                        "preference)")
    p.add_argument("--dot", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_mrp)

    p = sub.add_parser("mlp", help="most likely path")
    p.add_argument("tree")
    p.add_argument("--tiebreak", default="lexicographic",
                   choices=("lexicographic", "set_valued"))
    p.add_argument("--dot", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_mlp)

    p = sub.add_parser("distance",
                       help="distance between two trees or two bundles")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--spec", required=True, help="distance spec file")
    common(p)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("evaluate",
                       help="utility matrix, frontier, and dominance")
    p.add_argument("scenarios", help="scenario set file")
    p.add_argument("--config", required=True,
                   help="evaluation config file")
    p.add_argument("--pareto", action="store_true",
                   help="report the non-dominated frontier")
    p.add_argument("--entities", nargs="*", default=[],
                   help="entities compared by --pareto (default: all "
                        "declared)")
    p.add_argument("--dominance",
                   choices=("pareto", "single_actor", "coalition"),
                   help="write the dominance graph under this criterion")
    p.add_argument("--dominance-entity")
    p.add_argument("--dominance-coalition")
    common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("update", help="advance a state by a changeset")
    p.add_argument("db")
    p.add_argument("changeset")
    common(p)
    p.set_defaults(func=_cmd_update)

    p = sub.add_parser("sweep",
                       help="compare an output functional across methods")
    p.add_argument("--db", help="state to regenerate from")
    p.add_argument("--tree", action="append", default=[],
                   help="fixed tree file (repeatable); alternative to "
                        "--db")
    p.add_argument("--grid", required=True, help="method grid file")
    p.add_argument("--spec", required=True, help="distance spec file")
    p.add_argument("--psi", required=True, choices=PSI_KINDS,
                   help="output functional to compare")
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--scenarios",
                   help="scenario set (pareto_frontier_ids only)")
    p.add_argument("--eval-config",
                   help="evaluation config (pareto_frontier_ids only)")
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("trace",
                       help="verify a stored stage history chain")
    p.add_argument("state", nargs="+",
                   help="state files in stage order")
    p.add_argument("--config", help="trace config file (realized "
                                    "labels + regeneration method)")
    common(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("ingest",
                       help="gate record lines and build a changeset")
    p.add_argument("db")
    p.add_argument("records", help="newline-delimited record documents")
    p.add_argument("--manifest", help="source manifest file")
    p.add_argument("--policy", default="recency_priority",
                   choices=tuple(rp.value for rp in RevisionPolicy))
    p.add_argument("--trigger", help="realized event id")
    common(p)
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"scenariokit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"scenariokit: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
