"""Stage transitions: applying record batches to an assessment state,
event-effect propagation, trigger cascades, bundle regeneration, order
sensitivity diagnostics, and history-chain verification.

A transition never mutates its input. ``apply_update`` returns a fresh
state at stage t+1 whose ``history_ref`` is the content digest of the
stage-t state, together with a log that accounts for every input record
exactly once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

from .actions import preconditions_hold
from .errors import ChainError, MissingDataError, ReferenceError_, UsageError
from .model import (
    AssessmentState,
    AttitudeOperator,
    AttitudeRecord,
    AttributeAssignment,
    AttributeKind,
    ChangeSet,
    DyadicTie,
    Horizon,
    OptionInstance,
    ParameterTuple,
    ProvenanceRecord,
    RecordKind,
    RevisionPolicy,
    SalienceInputs,
    TypedRecord,
    Visibility,
    VisibilityKind,
)
from .sbafile import content_digest
from .trees import Bundle, GenerationParams, OCCURS, ScenarioTree, generate_tree

APPLIED = "applied"
SUPERSEDED = "superseded"
DISPUTED = "disputed"
REJECTED = "rejected"

_EVENT_FIELDS = ("likelihood", "impact", "confidence")


# ---------------------------------------------------------------------------
# Method parameters: how a bundle is produced from a state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodParams:
    """A named recipe for turning a state into a bundle: one generation
    parameter set per tree, then a selection rule over the results."""

    name: str
    generation: tuple[GenerationParams, ...]
    selection_rule: str = "all"
    k: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "generation", tuple(self.generation))


@dataclass(frozen=True)
class MethodGrid:
    entries: tuple[MethodParams, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        names = [m.name for m in self.entries]
        if len(set(names)) != len(names):
            raise UsageError("method grid entries need distinct names")

    def entry(self, name: str) -> MethodParams:
        for m in self.entries:
            if m.name == name:
                return m
        raise ReferenceError_(f"no method named {name!r} in grid")


@dataclass(frozen=True)
class TraceConfig:
    """Replay settings for a stored history: the realized label per
    transition (option or event id) and the regeneration method used to
    check each label was admissible when its stage was current."""

    realized: tuple[str, ...] = ()
    method: Optional[MethodParams] = None


def regenerate_bundle(db: AssessmentState,
                      method: MethodParams) -> Bundle:
    """Produce a fresh bundle from ``db`` under ``method``. Trees are
    always regenerated, never carried over from an earlier stage. Roots
    that do not resolve in ``db`` are skipped with a warning; when
    nothing is left the bundle is empty (also warned)."""
    from .solve import select_bundle

    known = set(db.entity_ids) | set(db.event_by_id)
    trees: list[ScenarioTree] = []
    used_ids: set[str] = set()
    for i, params in enumerate(method.generation):
        if params.root_label not in known:
            warnings.warn(
                f"method {method.name!r}: root {params.root_label!r} "
                "not in state; tree skipped", stacklevel=2)
            continue
        if params.tree_id in used_ids:
            params = replace(params, tree_id=f"{params.tree_id}.{i}")
        used_ids.add(params.tree_id)
        trees.append(generate_tree(db, params))
    if not trees:
        warnings.warn(
            f"method {method.name!r} produced no trees at stage "
            f"{db.stage}; empty bundle", stacklevel=2)
        return Bundle(stage=db.stage, trees=(),
                      selection_rule=method.selection_rule)
    return select_bundle(trees, method.selection_rule, k=method.k)


# ---------------------------------------------------------------------------
# Event effects and trigger cascades
# ---------------------------------------------------------------------------

def apply_event_effect(db: AssessmentState, event_id: str,
                       outcome: str = OCCURS) -> AssessmentState:
    """Materialize a realized event's declared attribute effects. A
    non-occurrence changes nothing. Ordinal attributes step along their
    level scale by the (rounded) effect amount, clamped at the ends;
    numeric attributes shift additively."""
    event = db.event_by_id.get(event_id)
    if event is None:
        raise ReferenceError_(f"unknown event {event_id!r}")
    if outcome != OCCURS:
        return db
    new_rows: list[AttributeAssignment] = []
    for n, eff in enumerate(event.effect_map):
        at = db.attribute_type_by_id.get(eff.attribute)
        if at is None:
            raise ReferenceError_(
                f"event {event_id!r} effect on undeclared attribute "
                f"{eff.attribute!r}")
        current = db.attribute_value(eff.subject, eff.attribute)
        if current is None:
            raise MissingDataError(
                f"event {event_id!r} effect needs a current value of "
                f"{eff.attribute!r} on {eff.subject!r}")
        if at.kind is AttributeKind.NUMERIC:
            value = float(current) + eff.amount
        else:
            idx = at.level_index(current) + int(round(eff.amount))
            idx = max(0, min(len(at.levels) - 1, idx))
            value = at.levels[idx]
        # Timestamp must sort strictly after every row already in the
        # slot, or the recency lookup would keep returning the old value.
        latest = max(
            (r.provenance.timestamp for r in db.assignments
             if r.subject == eff.subject and r.attribute == eff.attribute),
            default="")
        new_rows.append(AttributeAssignment(
            subject=eff.subject, attribute=eff.attribute, value=value,
            stage=db.stage,
            provenance=ProvenanceRecord(
                source=f"event:{event_id}", span="expert",
                method="event_effect",
                timestamp=f"{latest}+event:{event_id}:{n}")))
    if not new_rows:
        return db
    return db.evolve(assignments=db.assignments + tuple(new_rows))


def trigger_cascade(event_graph, realized: str,
                    likelihoods: Mapping[str, float],
                    impact: float) -> dict[str, float]:
    """One-hop likelihood propagation: every link leaving the realized
    event bumps its target's likelihood by weight times the link's
    declared transform of the realized impact, clamped to [0, 1].
    Events not downstream keep their entries unchanged."""
    if realized not in likelihoods:
        raise ReferenceError_(
            f"realized event {realized!r} has no likelihood entry")
    out = dict(likelihoods)
    for link in event_graph:
        if link.source != realized:
            continue
        if link.target not in out:
            raise ReferenceError_(
                f"trigger link target {link.target!r} has no likelihood "
                "entry")
        bumped = out[link.target] + link.weight * link.f_spec.evaluate(impact)
        out[link.target] = min(1.0, max(0.0, bumped))
    return out


def adaptive_likelihood_update(ell: float, observed: float,
                               beta: float) -> float:
    """Convex blend of a held likelihood toward an observed frequency."""
    for name, v in (("likelihood", ell), ("observed", observed),
                    ("blend weight", beta)):
        if not 0.0 <= v <= 1.0:
            raise UsageError(f"{name} {v} outside [0, 1]")
    return (1.0 - beta) * ell + beta * observed


def calibrate_parameter(theta: float, theta_hat: float,
                        eta: float) -> float:
    """Step a parameter toward a reference estimate by learning rate
    ``eta``; the result always lies between the two inputs."""
    if not 0.0 <= eta <= 1.0:
        raise UsageError(f"learning rate {eta} outside [0, 1]")
    return theta + eta * (theta_hat - theta)


# ---------------------------------------------------------------------------
# Stage update
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disposition:
    """What happened to one input record."""

    record_index: int
    status: str
    reason: str = ""


@dataclass(frozen=True)
class UpdateLog:
    from_stage: int
    to_stage: int
    history_ref: str
    dispositions: tuple[Disposition, ...] = ()
    conflicts: tuple[str, ...] = ()
    event_notes: tuple[str, ...] = ()
    feasibility_changes: tuple[tuple[str, bool, bool], ...] = ()

    def status_of(self, record_index: int) -> str:
        for d in self.dispositions:
            if d.record_index == record_index:
                return d.status
        raise ReferenceError_(f"no record index {record_index} in log")

    @property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for d in self.dispositions:
            out[d.status] = out.get(d.status, 0) + 1
        return out


def _typecheck(db: AssessmentState, rec: TypedRecord) -> Optional[str]:
    """Reason a record cannot be interpreted against the state, or None
    when it is well typed."""
    if not rec.provenance.source or rec.provenance.source == "unspecified":
        return "record lacks a provenance source"
    if rec.kind is RecordKind.ATTRIBUTE:
        if rec.subject not in db.entity_ids:
            return f"unknown subject {rec.subject!r}"
        at = db.attribute_type_by_id.get(rec.predicate)
        if at is None:
            return f"unknown attribute {rec.predicate!r}"
        if at.kind is AttributeKind.NUMERIC:
            if isinstance(rec.object, bool) or not isinstance(
                    rec.object, (int, float)):
                return (f"attribute {rec.predicate!r} is numeric; got "
                        f"{rec.object!r}")
        elif rec.object not in at.levels:
            return (f"value {rec.object!r} outside the levels of "
                    f"{rec.predicate!r}")
        return None
    if rec.kind is RecordKind.ATTITUDE:
        if rec.subject not in db.entity_ids:
            return f"unknown holder {rec.subject!r}"
        try:
            op = AttitudeOperator(rec.predicate)
        except ValueError:
            return f"unknown attitude operator {rec.predicate!r}"
        if str(rec.object) not in db.proposition_by_id:
            return f"unknown proposition {rec.object!r}"
        is_coalition = rec.subject in db.coalition_by_id
        if (op is AttitudeOperator.COMMIT) != is_coalition:
            return ("commitment records need a coalition holder and "
                    "coalitions hold only commitments")
        return None
    if rec.kind is RecordKind.RELATION:
        if db.relation_type_by_id.get(rec.predicate) is None:
            return f"unknown relation {rec.predicate!r}"
        if rec.subject not in db.entity_ids:
            return f"unknown tie source {rec.subject!r}"
        if str(rec.object) not in db.entity_ids:
            return f"unknown tie target {rec.object!r}"
        return None
    if rec.kind is RecordKind.EVENT:
        if rec.subject not in db.event_by_id:
            return f"unknown event {rec.subject!r}"
        if rec.predicate not in _EVENT_FIELDS:
            return f"unknown event field {rec.predicate!r}"
        if isinstance(rec.object, bool) or not isinstance(
                rec.object, (int, float)):
            return f"event field {rec.predicate!r} needs a number"
        if rec.predicate in ("likelihood", "confidence") \
                and not 0.0 <= float(rec.object) <= 1.0:
            return f"event {rec.predicate} {rec.object} outside [0, 1]"
        return None
    if rec.kind is RecordKind.OPTION:
        if rec.subject not in db.entity_ids:
            return f"unknown acting entity {rec.subject!r}"
        if db.action_type_by_id.get(rec.predicate) is None:
            return f"unknown action type {rec.predicate!r}"
        if not isinstance(rec.object, str) or not rec.object:
            return "option records need a string option id"
        if rec.object in db.option_by_id:
            return f"option id {rec.object!r} already declared"
        return None
    return f"unknown record kind {rec.kind!r}"


def _slot_key(db: AssessmentState, rec: TypedRecord) -> tuple:
    """Conflict slot: records in the same slot assert about the same
    thing and are resolved together when their contents diverge."""
    if rec.kind is RecordKind.ATTRIBUTE:
        return ("attr", rec.subject, rec.predicate)
    if rec.kind is RecordKind.ATTITUDE:
        content = str(rec.object)
        neg = db.negation_id(content)
        pair = content if neg is None else min(content, neg)
        return ("att", rec.subject, rec.predicate, pair)
    if rec.kind is RecordKind.RELATION:
        return ("rel", rec.predicate, rec.subject, str(rec.object))
    if rec.kind is RecordKind.EVENT:
        return ("event", rec.subject, rec.predicate)
    return ("option", str(rec.object))


def _slot_conflicting(kind: RecordKind,
                      recs: Sequence[tuple[int, TypedRecord]]) -> bool:
    if len(recs) < 2:
        return False
    if kind is RecordKind.OPTION:
        return True
    if kind is RecordKind.ATTITUDE:
        return len({str(r.object) for _, r in recs}) > 1
    if kind is RecordKind.RELATION:
        return len({r.qualifiers.ell for _, r in recs}) > 1
    return len({str(r.object) for _, r in recs}) > 1


def _quality(rec: TypedRecord,
             ratings: Mapping[str, float]) -> float:
    q = ratings.get(rec.provenance.source)
    return rec.confidence if q is None else q


def _resolve_slot(recs: list[tuple[int, TypedRecord]],
                  policy: RevisionPolicy,
                  ratings: Mapping[str, float],
                  ) -> dict[int, str]:
    """Map record index -> status for one conflicted slot."""
    if policy is RevisionPolicy.RECORD_CONFLICT:
        return {i: DISPUTED for i, _ in recs}
    if policy is RevisionPolicy.RECENCY_PRIORITY:
        def key(rec: TypedRecord):
            return (rec.time.start, rec.provenance.timestamp)
    else:
        def key(rec: TypedRecord):
            return _quality(rec, ratings)
    best = max(key(r) for _, r in recs)
    winners = [i for i, r in recs if key(r) == best]
    if len(winners) > 1:
        out = {i: SUPERSEDED for i, _ in recs}
        out.update({i: DISPUTED for i in winners})
        return out
    out = {i: SUPERSEDED for i, _ in recs}
    out[winners[0]] = APPLIED
    return out


def _params_from_qualifiers(db: AssessmentState,
                            rec: TypedRecord) -> Optional[ParameterTuple]:
    q = rec.qualifiers
    if q.ell is None and q.pi is None and q.vartheta is None:
        return None
    scales = db.parameter_scales
    ell = q.ell if q.ell is not None else scales.likelihood_levels[0]
    pi = q.pi if q.pi is not None else scales.intensity_levels[0]
    horizon = Horizon(q.vartheta) if q.vartheta else Horizon.MEDIUM
    return ParameterTuple(likelihood_level=ell, intensity=pi,
                          horizon=horizon)


def _float_qualifier(value, default: float) -> float:
    if value is None:
        return default
    return float(value)


def apply_update(db: AssessmentState,
                 changeset: ChangeSet) -> tuple[AssessmentState, UpdateLog]:
    """Advance the state one stage under a record batch.

    Every record ends in exactly one disposition: ``applied`` (mutates
    the next state), ``superseded`` (lost a conflict under the declared
    policy), ``disputed`` (retained but marked, excluded from
    computation), or ``rejected`` (ill typed or unsourced; no effect).
    Conflicts are resolved slot-wise, never by silent overwrite. The
    realized trigger event, when present, materializes its effects and
    bumps one-hop successor likelihoods afterwards.
    """
    if not changeset.records:
        raise UsageError("changeset has no records")

    ratings: dict[str, float] = {}
    for s in changeset.sources:
        ratings[s.id] = (s.reliability + s.coverage
                         + s.temporal_resolution) / 3.0

    statuses: dict[int, str] = {}
    reasons: dict[int, str] = {}
    conflicts: list[str] = []

    live: list[tuple[int, TypedRecord]] = []
    for i, rec in enumerate(changeset.records):
        reason = _typecheck(db, rec)
        if reason is not None:
            statuses[i] = REJECTED
            reasons[i] = reason
        else:
            live.append((i, rec))

    slots: dict[tuple, list[tuple[int, TypedRecord]]] = {}
    for i, rec in live:
        slots.setdefault(_slot_key(db, rec), []).append((i, rec))

    for slot, members in sorted(slots.items(), key=lambda kv: kv[0]):
        kind = members[0][1].kind
        if _slot_conflicting(kind, members):
            resolved = _resolve_slot(members, changeset.revision_policy,
                                     ratings)
            statuses.update(resolved)
            conflicts.append(
                "conflict in slot " + "/".join(map(str, slot))
                + ": records "
                + ", ".join(f"{i}={resolved[i]}" for i, _ in members))
        else:
            for i, _ in members:
                statuses[i] = APPLIED

    next_stage = db.stage + 1
    new_assignments: list[AttributeAssignment] = []
    new_attitudes: list[AttitudeRecord] = []
    new_ties: list[DyadicTie] = []
    new_options: list[OptionInstance] = []
    events = {e.id: e for e in db.events}
    dispute_existing: list[tuple] = []

    for i, rec in live:
        status = statuses[i]
        if status == SUPERSEDED:
            continue
        disputed = status == DISPUTED
        if rec.kind is RecordKind.ATTRIBUTE:
            new_assignments.append(AttributeAssignment(
                subject=rec.subject, attribute=rec.predicate,
                value=rec.object, stage=next_stage,
                provenance=rec.provenance, disputed=disputed))
        elif rec.kind is RecordKind.ATTITUDE:
            content = str(rec.object)
            new_attitudes.append(AttitudeRecord(
                holder=rec.subject,
                operator=AttitudeOperator(rec.predicate),
                content=content,
                params=_params_from_qualifiers(db, rec),
                stage=next_stage, provenance=rec.provenance,
                disputed=disputed))
            neg = db.negation_id(content)
            if neg is not None and not disputed:
                for row in db.attitudes:
                    if (row.holder == rec.subject and not row.disputed
                            and row.operator.value == rec.predicate
                            and row.content == neg):
                        dispute_existing.append(
                            ("att", row.holder, row.operator, row.content))
                        conflicts.append(
                            f"record {i} contradicts held "
                            f"{row.operator.value}({row.content}) of "
                            f"{row.holder}; prior row marked disputed")
        elif rec.kind is RecordKind.RELATION:
            rt = db.relation_type_by_id[rec.predicate]
            layer = rt.default_layer or (rt.layers[0] if rt.layers else "")
            new_ties.append(DyadicTie(
                relation=rec.predicate, source=rec.subject,
                target=str(rec.object),
                weight=_float_qualifier(rec.qualifiers.ell, 1.0),
                sign=rt.default_sign if rt.signed else 0,
                layer=layer,
                visibility=Visibility(kind=VisibilityKind.OBSERVED),
                stage=next_stage, provenance=rec.provenance,
                disputed=disputed))
        elif rec.kind is RecordKind.EVENT:
            if disputed:
                reasons.setdefault(
                    i, "event field update disputed; not applied")
                continue
            events[rec.subject] = replace(
                events[rec.subject], **{rec.predicate: float(rec.object)})
        elif rec.kind is RecordKind.OPTION:
            if disputed:
                reasons.setdefault(
                    i, "option instantiation disputed; not applied")
                continue
            q = rec.qualifiers
            new_options.append(OptionInstance(
                id=str(rec.object), action_type=rec.predicate,
                acting_entity=rec.subject,
                salience_inputs=SalienceInputs(
                    intensity=_float_qualifier(q.pi, 0.0),
                    success_likelihood=_float_qualifier(q.ell, 0.5),
                    horizon=Horizon(q.vartheta) if q.vartheta
                    else Horizon.MEDIUM)))

    attitudes = list(db.attitudes)
    if dispute_existing:
        marked = set(dispute_existing)
        attitudes = [
            replace(row, disputed=True)
            if ("att", row.holder, row.operator, row.content) in marked
            and not row.disputed else row
            for row in attitudes]

    feas_before = {o.id: preconditions_hold(db, o) for o in db.options}

    out = db.evolve(
        stage=next_stage,
        history_ref=content_digest(db),
        assignments=db.assignments + tuple(new_assignments),
        attitudes=tuple(attitudes) + tuple(new_attitudes),
        ties=db.ties + tuple(new_ties),
        options=db.options + tuple(new_options),
        events=tuple(events[eid] for eid in sorted(events)),
    )

    event_notes: list[str] = []
    if changeset.trigger is not None:
        trig = out.event_by_id.get(changeset.trigger)
        if trig is None:
            event_notes.append(
                f"trigger {changeset.trigger!r} not declared; ignored")
        else:
            out = apply_event_effect(out, trig.id, OCCURS)
            for eff in trig.effect_map:
                event_notes.append(
                    f"effect of {trig.id}: {eff.attribute} of "
                    f"{eff.subject} shifted by {eff.amount:g}")
            likelihoods = {e.id: e.likelihood for e in out.events}
            updated = trigger_cascade(
                out.event_graph, trig.id, likelihoods, trig.impact)
            changed = {eid: v for eid, v in updated.items()
                       if v != likelihoods[eid]}
            if changed:
                out = out.evolve(events=tuple(
                    replace(e, likelihood=updated[e.id])
                    for e in out.events))
                for eid in sorted(changed):
                    event_notes.append(
                        f"cascade: likelihood of {eid} -> "
                        f"{changed[eid]:g}")

    feas_changes = tuple(
        (oid, feas_before[oid], now)
        for oid, now in sorted(
            (o.id, preconditions_hold(out, o)) for o in out.options
            if o.id in feas_before)
        if feas_before[oid] != now)

    log = UpdateLog(
        from_stage=db.stage, to_stage=next_stage,
        history_ref=out.history_ref or "",
        dispositions=tuple(
            Disposition(i, statuses[i], reasons.get(i, ""))
            for i in range(len(changeset.records))),
        conflicts=tuple(conflicts),
        event_notes=tuple(event_notes),
        feasibility_changes=feas_changes)
    return out, log


# ---------------------------------------------------------------------------
# Order sensitivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderSensitivityReport:
    """Comparison of update-then-regenerate against regenerate-then-hold.

    ``distance`` is the bundle distance between the two resulting
    bundles in the shared descriptor space (the transport between the
    two encoding spaces is the identity). A zero distance with an empty
    changeset is guaranteed; a positive distance witnesses that the
    operations do not commute.
    """

    distance: Optional[float]
    updated_first_trees: tuple[tuple[str, str], ...]
    regenerated_first_trees: tuple[tuple[str, str], ...]
    options_only_updated_first: tuple[str, ...]
    options_only_regenerated_first: tuple[str, ...]
    options_shared: tuple[str, ...]
    notes: tuple[str, ...] = ()


def _bundle_option_refs(bundle: Bundle) -> frozenset[str]:
    refs = set()
    for tree in bundle.trees:
        for e in tree.edges:
            if e.label.executes_option():
                refs.add(e.label.ref)
    return frozenset(refs)


def _tree_digests(bundle: Bundle) -> tuple[tuple[str, str], ...]:
    return tuple((t.id, content_digest(t)) for t in bundle.trees)


def noncommutativity_check(db: AssessmentState,
                           changeset: Optional[ChangeSet],
                           method: MethodParams,
                           spec) -> OrderSensitivityReport:
    """Measure how much applying a record batch before regeneration
    changes the produced bundle, relative to regenerating from the
    unchanged state. ``spec`` is the distance specification used to
    compare the two bundles."""
    from .space import descriptor_bundle_distance, encode_tree

    if changeset is not None and changeset.records:
        updated, _ = apply_update(db, changeset)
    else:
        updated = db
    first = regenerate_bundle(updated, method)
    second = regenerate_bundle(db, method)

    notes: list[str] = []
    if first.trees and second.trees:
        distance: Optional[float] = descriptor_bundle_distance(
            [encode_tree(t, spec.encoding) for t in first.trees],
            [encode_tree(t, spec.encoding) for t in second.trees], spec)
    elif not first.trees and not second.trees:
        distance = 0.0
        notes.append("both bundles empty")
    else:
        distance = None
        notes.append("one bundle empty; distance undefined")

    a = _bundle_option_refs(first)
    b = _bundle_option_refs(second)
    return OrderSensitivityReport(
        distance=distance,
        updated_first_trees=_tree_digests(first),
        regenerated_first_trees=_tree_digests(second),
        options_only_updated_first=tuple(sorted(a - b)),
        options_only_regenerated_first=tuple(sorted(b - a)),
        options_shared=tuple(sorted(a & b)),
        notes=tuple(notes))


# ---------------------------------------------------------------------------
# History chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RetrodictionEntry:
    stage: int
    label: str
    admissible: bool


@dataclass(frozen=True)
class TraceReport:
    chain: tuple[tuple[int, str], ...]
    retrodiction: tuple[RetrodictionEntry, ...] = ()

    @property
    def all_admissible(self) -> bool:
        return all(r.admissible for r in self.retrodiction)


def _bundle_labels(bundle: Bundle) -> frozenset[str]:
    refs = set()
    for tree in bundle.trees:
        for e in tree.edges:
            refs.add(e.label.ref)
    return frozenset(refs)


def history_trace(states: Sequence[AssessmentState],
                  realized: Sequence[str] = (),
                  method: Optional[MethodParams] = None) -> TraceReport:
    """Verify a stored stage sequence: each state must carry the digest
    of its predecessor and a strictly larger stage index, else the
    chain is broken. With realized labels and a method, additionally
    replay each transition's bundle and check the label that actually
    happened was on offer."""
    if not states:
        raise UsageError("history trace needs at least one state")
    chain: list[tuple[int, str]] = []
    prev: Optional[AssessmentState] = None
    prev_digest = ""
    for pos, state in enumerate(states):
        digest = content_digest(state)
        if prev is not None:
            if state.stage <= prev.stage:
                raise ChainError(
                    f"stage {state.stage} at position {pos} does not "
                    f"increase over {prev.stage}")
            if state.history_ref != prev_digest:
                raise ChainError(
                    f"state at stage {state.stage} does not reference "
                    "its predecessor's digest")
        chain.append((state.stage, digest))
        prev, prev_digest = state, digest

    retro: list[RetrodictionEntry] = []
    if realized:
        if method is None:
            raise UsageError(
                "retrodiction needs a regeneration method")
        if len(realized) != len(states) - 1:
            raise UsageError(
                f"{len(realized)} realized labels for "
                f"{len(states) - 1} transitions")
        for i, label in enumerate(realized):
            bundle = regenerate_bundle(states[i], method)
            retro.append(RetrodictionEntry(
                stage=states[i].stage, label=label,
                admissible=label in _bundle_labels(bundle)))
    return TraceReport(chain=tuple(chain), retrodiction=tuple(retro))
