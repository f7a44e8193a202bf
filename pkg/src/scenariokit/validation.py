"""Structural and attitude-consistency checking of assessment states.

Structural checks guarantee the state is safe to compute on: references
resolve, ids are unique, values sit inside their declared scales, stages
never exceed the state's stage. The attitude checks flag violations of
the consistency rules relating knowledge, belief, desire, intention,
fear, and collective commitment. Severities are configurable; closure
rules run only over explicitly declared implication links between
propositions (single hop, no inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .model import (
    ACTOR_OPERATORS,
    AssessmentState,
    AttitudeOperator,
    AttributeKind,
)

SEVERITY_RANK = {"error": 0, "warning": 1, "note": 2}

DEFAULT_SEVERITY = {
    "A1": "error",
    "A2": "warning",
    "A3": "warning",
    "A5": "warning",
    "A6": "error",
    "A7": "error",
    "A8": "warning",
    "C1": "warning",
    "C2": "error",
    "C4": "warning",
    "C5": "error",
}

ATTITUDE_CODES = tuple(sorted(DEFAULT_SEVERITY))


@dataclass(frozen=True)
class Finding:
    code: str
    category: str  # structural | axiom
    severity: str  # error | warning | note
    message: str
    subjects: tuple[str, ...] = ()


@dataclass(frozen=True)
class AxiomConfig:
    severities: tuple[tuple[str, str], ...] = ()
    skip: tuple[str, ...] = ()

    def severity_of(self, code: str) -> str:
        for known, severity in self.severities:
            if known == code:
                if severity not in SEVERITY_RANK:
                    raise ValueError(f"unknown severity {severity!r}")
                return severity
        return DEFAULT_SEVERITY[code]

    def skipped(self, code: str) -> bool:
        return code in self.skip


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "findings", tuple(sorted(
            self.findings,
            key=lambda f: (0 if f.category == "structural" else 1,
                           SEVERITY_RANK[f.severity], f.code,
                           f.subjects, f.message))))

    @cached_property
    def ok(self) -> bool:
        return all(f.severity != "error" for f in self.findings)

    @cached_property
    def counts(self) -> dict[str, int]:
        out = {"error": 0, "warning": 0, "note": 0}
        for f in self.findings:
            out[f.severity] += 1
        return out


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------

def _structural(db: AssessmentState) -> list[Finding]:
    out: list[Finding] = []

    def err(code: str, message: str, *subjects: str) -> None:
        out.append(Finding(code=code, category="structural",
                           severity="error", message=message,
                           subjects=tuple(subjects)))

    def warn(code: str, message: str, *subjects: str) -> None:
        out.append(Finding(code=code, category="structural",
                           severity="warning", message=message,
                           subjects=tuple(subjects)))

    for name, ids in (
            ("actor", [a.id for a in db.actors]),
            ("coalition", [c.id for c in db.coalitions]),
            ("proposition", [p.id for p in db.propositions]),
            ("attribute type", [t.id for t in db.attribute_types]),
            ("relation type", [r.id for r in db.relation_types]),
            ("action type", [t.id for t in db.action_types]),
            ("option", [o.id for o in db.options]),
            ("event", [e.id for e in db.events])):
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                err("S-DUP", f"duplicate {name} id {i!r}", i)
            seen.add(i)

    actor_ids = {a.id for a in db.actors}
    entity_ids = db.entity_ids
    prop_ids = {p.id for p in db.propositions}

    for c in db.coalitions:
        for m in c.members:
            if m not in actor_ids:
                err("S-REF", f"coalition {c.id!r} member {m!r} is not "
                    "a declared actor", c.id, m)
        if c.weights:
            named = {w[0] for w in c.weights}
            if named != set(c.members):
                err("S-REF", f"coalition {c.id!r} weights do not cover "
                    "exactly its members", c.id)

    for p in db.propositions:
        for ref, slot in ((p.negation_of, "negation"),
                          (p.possibility_of, "possibility")):
            if ref is not None and ref not in prop_ids:
                err("S-REF", f"proposition {p.id!r} {slot} target "
                    f"{ref!r} undeclared", p.id, ref)
        for q in p.implies:
            if q not in prop_ids:
                err("S-REF", f"proposition {p.id!r} implies undeclared "
                    f"{q!r}", p.id, q)
        if p.negation_of is not None:
            other = db.proposition_by_id.get(p.negation_of)
            if other is not None and other.negation_of is not None \
                    and other.negation_of != p.id:
                err("S-NEG", f"negation links of {p.id!r} and "
                    f"{other.id!r} are not mutual", p.id, other.id)

    for asg in db.assignments:
        if asg.subject not in entity_ids:
            err("S-REF", f"attribute assignment subject {asg.subject!r} "
                "undeclared", asg.subject, asg.attribute)
            continue
        at = db.attribute_type_by_id.get(asg.attribute)
        if at is None:
            err("S-REF", f"assignment on undeclared attribute "
                f"{asg.attribute!r}", asg.subject, asg.attribute)
            continue
        if at.kind in (AttributeKind.ORDINAL, AttributeKind.CATEGORICAL):
            if asg.value not in at.levels:
                err("S-VALUE", f"value {asg.value!r} of attribute "
                    f"{asg.attribute!r} on {asg.subject!r} is outside "
                    f"the declared levels", asg.subject, asg.attribute)
        elif not isinstance(asg.value, (int, float)):
            err("S-VALUE", f"numeric attribute {asg.attribute!r} on "
                f"{asg.subject!r} has non-numeric value {asg.value!r}",
                asg.subject, asg.attribute)
        if asg.stage > db.stage:
            err("S-STAGE", f"assignment of {asg.attribute!r} on "
                f"{asg.subject!r} carries stage {asg.stage} > "
                f"{db.stage}", asg.subject, asg.attribute)

    scales = db.parameter_scales
    for att in db.attitudes:
        if att.holder not in entity_ids:
            err("S-REF", f"attitude holder {att.holder!r} undeclared",
                att.holder)
            continue
        if att.content not in prop_ids:
            err("S-REF", f"attitude content {att.content!r} undeclared",
                att.holder, att.content)
        is_coalition = att.holder in db.coalition_by_id
        if att.operator == AttitudeOperator.COMMIT and not is_coalition:
            err("S-HOLDER", f"collective commitment held by "
                f"non-coalition {att.holder!r}", att.holder)
        if att.operator in ACTOR_OPERATORS and is_coalition:
            err("S-HOLDER", f"individual attitude operator "
                f"{att.operator.value} held by coalition "
                f"{att.holder!r}", att.holder)
        if att.stage > db.stage:
            err("S-STAGE", f"attitude of {att.holder!r} carries stage "
                f"{att.stage} > {db.stage}", att.holder, att.content)
        params = att.params
        if params is not None:
            ell = params.likelihood_level
            if isinstance(ell, str):
                if ell not in scales.likelihood_levels:
                    err("S-SCALE", f"likelihood level {ell!r} not on "
                        "the declared scale", att.holder, att.content)
            elif not 0.0 <= float(ell) <= 1.0:
                err("S-SCALE", f"numeric likelihood {ell!r} outside "
                    "[0, 1]", att.holder, att.content)
            if isinstance(params.intensity, int) \
                    and params.intensity not in scales.intensity_levels:
                err("S-SCALE", f"intensity {params.intensity!r} not on "
                    "the declared scale", att.holder, att.content)

    for tie in db.ties:
        rt = db.relation_type_by_id.get(tie.relation)
        if rt is None:
            err("S-REF", f"tie on undeclared relation {tie.relation!r}",
                tie.relation, tie.source, tie.target)
            continue
        for endpoint in (tie.source, tie.target):
            if endpoint not in entity_ids:
                err("S-REF", f"tie endpoint {endpoint!r} undeclared",
                    tie.relation, endpoint)
        if rt.layers and tie.layer is not None \
                and tie.layer not in rt.layers:
            err("S-VALUE", f"tie layer {tie.layer!r} not declared on "
                f"relation {tie.relation!r}", tie.relation, tie.source,
                tie.target)
        if not rt.signed and tie.sign != 0:
            err("S-SIGN", f"signed tie on unsigned relation "
                f"{tie.relation!r}", tie.relation, tie.source,
                tie.target)
        if tie.stage > db.stage:
            err("S-STAGE", f"tie on {tie.relation!r} carries stage "
                f"{tie.stage} > {db.stage}", tie.relation, tie.source,
                tie.target)

    for he in db.hyperedges:
        if he.relation not in db.relation_type_by_id:
            err("S-REF", f"hyperedge on undeclared relation "
                f"{he.relation!r}", he.relation)
        for part in he.participants:
            if part not in entity_ids:
                err("S-REF", f"hyperedge participant {part!r} "
                    "undeclared", he.relation, part)

    for opt in db.options:
        at = db.action_type_by_id.get(opt.action_type)
        if at is None:
            err("S-REF", f"option {opt.id!r} instantiates undeclared "
                f"action type {opt.action_type!r}", opt.id)
            continue
        if opt.acting_entity not in entity_ids:
            err("S-REF", f"option {opt.id!r} acting entity "
                f"{opt.acting_entity!r} undeclared", opt.id)
        declared = at.parameter_names()
        for name, _ in opt.bindings:
            if name not in declared:
                err("S-BIND", f"option {opt.id!r} binds undeclared "
                    f"parameter {name!r}", opt.id, name)

    event_ids = {e.id for e in db.events}
    for ev in db.events:
        for eff in ev.effect_map:
            if eff.subject not in entity_ids:
                err("S-REF", f"event {ev.id!r} effect subject "
                    f"{eff.subject!r} undeclared", ev.id, eff.subject)
            if eff.attribute not in db.attribute_type_by_id:
                err("S-REF", f"event {ev.id!r} effect attribute "
                    f"{eff.attribute!r} undeclared", ev.id,
                    eff.attribute)
    for link in db.event_graph:
        for endpoint in (link.source, link.target):
            if endpoint not in event_ids:
                err("S-REF", f"trigger link endpoint {endpoint!r} is "
                    "not a declared event", endpoint)

    return out


# ---------------------------------------------------------------------------
# Attitude consistency
# ---------------------------------------------------------------------------

def _attitudes(db: AssessmentState, config: AxiomConfig) -> list[Finding]:
    out: list[Finding] = []

    def hit(code: str, message: str, *subjects: str) -> None:
        if config.skipped(code):
            return
        out.append(Finding(code=code, category="axiom",
                           severity=config.severity_of(code),
                           message=message, subjects=tuple(subjects)))

    def note(code: str, message: str, *subjects: str) -> None:
        if config.skipped(code):
            return
        out.append(Finding(code=code, category="axiom", severity="note",
                           message=message, subjects=tuple(subjects)))

    K, B, W, I, F = (AttitudeOperator.KNOW, AttitudeOperator.BELIEVE,
                     AttitudeOperator.WANT, AttitudeOperator.INTEND,
                     AttitudeOperator.FEAR)
    Com = AttitudeOperator.COMMIT

    active = [a for a in db.attitudes if not a.disputed
              and a.content in db.proposition_by_id
              and a.holder in db.entity_ids]

    held: dict[tuple[str, AttitudeOperator], set[str]] = {}
    for a in active:
        held.setdefault((a.holder, a.operator), set()).add(a.content)

    def holds(holder: str, op: AttitudeOperator, content: str) -> bool:
        return content in held.get((holder, op), ())

    for a in active:
        p = a.content
        neg = db.negation_id(p)
        if a.operator == K:
            if not holds(a.holder, B, p):
                hit("A1", f"{a.holder!r} knows {p!r} without believing "
                    "it", a.holder, p)
            if neg is not None and holds(a.holder, B, neg):
                hit("A6", f"{a.holder!r} knows {p!r} while believing "
                    f"its negation {neg!r}", a.holder, p, neg)
            for q in db.proposition_by_id[p].implies:
                if q in db.proposition_by_id \
                        and not holds(a.holder, K, q):
                    hit("A8", f"{a.holder!r} knows {p!r} but not its "
                        f"declared consequence {q!r}", a.holder, p, q)
        elif a.operator == B:
            for q in db.proposition_by_id[p].implies:
                if q in db.proposition_by_id \
                        and not holds(a.holder, B, q):
                    hit("A2", f"{a.holder!r} believes {p!r} but not "
                        f"its declared consequence {q!r}",
                        a.holder, p, q)
        elif a.operator == I:
            if neg is not None and holds(a.holder, I, neg):
                if p < neg:  # report each conflicting pair once
                    hit("A7", f"{a.holder!r} intends both {p!r} and "
                        f"{neg!r}", a.holder, p, neg)
            if not holds(a.holder, W, p):
                hit("A3", f"{a.holder!r} intends {p!r} without wanting "
                    "it", a.holder, p)
            feasible = [q.id for q in db.propositions
                        if q.possibility_of == p]
            if not feasible:
                note("A3", f"no feasibility proposition declared for "
                     f"{p!r}; belief half of the intention check "
                     "skipped", a.holder, p)
            elif not any(holds(a.holder, B, q) for q in feasible):
                hit("A3", f"{a.holder!r} intends {p!r} without "
                    "believing it possible", a.holder, p)
        elif a.operator == F:
            if neg is None:
                note("A5", f"no negation declared for {p!r}; fear "
                     "check skipped", a.holder, p)
            elif not holds(a.holder, W, neg):
                hit("A5", f"{a.holder!r} fears {p!r} without wanting "
                    f"its negation {neg!r}", a.holder, p, neg)
        elif a.operator == Com:
            coalition = db.coalition_by_id.get(a.holder)
            if coalition is None:
                continue
            if neg is not None and holds(a.holder, Com, neg):
                if p < neg:
                    hit("C2", f"coalition {a.holder!r} is committed to "
                        f"both {p!r} and {neg!r}", a.holder, p, neg)
            lacking = [m for m in coalition.members
                       if not (holds(m, B, p) or holds(m, I, p))]
            if lacking:
                hit("C1", f"coalition {a.holder!r} commitment to {p!r} "
                    "has members without supporting belief or "
                    f"intention: {sorted(lacking)}",
                    a.holder, p, *sorted(lacking))
            for q in db.proposition_by_id[p].implies:
                if q in db.proposition_by_id \
                        and not holds(a.holder, Com, q):
                    hit("C4", f"coalition {a.holder!r} commitment to "
                        f"{p!r} does not extend to its declared "
                        f"consequence {q!r}", a.holder, p, q)

    coalitions = list(db.coalitions)
    for i, X in enumerate(coalitions):
        for Y in coalitions[i + 1:]:
            overlap = sorted(set(X.members) & set(Y.members))
            if not overlap:
                continue
            for p in held.get((X.id, Com), ()):
                neg = db.negation_id(p)
                if neg is None or not holds(Y.id, Com, neg):
                    continue
                for actor in overlap:
                    hit("C5", f"actor {actor!r} sits in coalitions "
                        f"{X.id!r} and {Y.id!r} with opposed "
                        f"commitments {p!r} / {neg!r}",
                        actor, X.id, Y.id, p, neg)

    return out


def validate_assessment_state(db: AssessmentState,
                              axiom_set: AxiomConfig = AxiomConfig(),
                              ) -> ValidationReport:
    findings = _structural(db)
    findings.extend(_attitudes(db, axiom_set))
    return ValidationReport(findings=tuple(findings))
