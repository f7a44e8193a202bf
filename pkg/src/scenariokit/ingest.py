"""Record intake: parsing typed extraction records, gating them against
a state, scoring sources, and assembling the accepted remainder into a
changeset ready for a stage update.

Parsing and gating are pure per record; assembly is a deterministic
fold. Records never create entities as a side effect: a reference that
does not resolve is routed to review, not auto-registered.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import median
from typing import Mapping, Optional, Sequence

from .errors import NormalizationError, SchemaError, UsageError
from .model import (
    AssessmentState,
    AttitudeOperator,
    AttributeKind,
    AuditEntry,
    ChangeSet,
    Horizon,
    RecordKind,
    RevisionPolicy,
    SourceItem,
    TypedRecord,
)
from .sbafile import decode, to_jsonable

ACCEPTED = "accepted"
FLAGGED = "flagged"
REJECTED = "rejected"

GATES = ("schema_validity", "provenance_completeness", "entity_alignment",
         "constraint_satisfaction", "calibration_tag")

_EVENT_FIELDS = ("likelihood", "impact", "confidence")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_record(document: Mapping) -> TypedRecord:
    """Build a typed record from parsed structured text. Raises a schema
    error naming the offending field; a successful parse round-trips
    bit-exactly through ``serialize_record``."""
    if not isinstance(document, Mapping):
        raise SchemaError("record document must be a mapping")
    kind = document.get("kind")
    if kind is None:
        raise SchemaError("record field 'kind' missing")
    try:
        RecordKind(kind)
    except ValueError:
        raise SchemaError(f"record kind {kind!r} not one of "
                          + "/".join(k.value for k in RecordKind))
    for name in ("subject", "predicate"):
        if not document.get(name):
            raise SchemaError(f"record field {name!r} missing or empty")
    if "object" not in document:
        raise SchemaError("record field 'object' missing")
    prov = document.get("provenance")
    if not isinstance(prov, Mapping) or not prov.get("source"):
        raise SchemaError("record field 'provenance.source' missing "
                          "(provenance completeness)")
    confidence = document.get("confidence", 1.0)
    if isinstance(confidence, bool) or not isinstance(
            confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
        raise SchemaError(
            f"record field 'confidence' {confidence!r} outside [0, 1]")
    return decode(TypedRecord, dict(document))


def serialize_record(record: TypedRecord) -> dict:
    """Inverse of ``parse_record`` on valid records."""
    return to_jsonable(record)


def parse_record_lines(text: str) -> tuple[TypedRecord, ...]:
    """Parse newline-delimited record documents, skipping blank lines."""
    import json

    out = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except ValueError as exc:
            raise SchemaError(f"line {n}: not valid structured text "
                              f"({exc})")
        try:
            out.append(parse_record(raw))
        except SchemaError as exc:
            raise SchemaError(f"line {n}: {exc}")
    return tuple(out)


# ---------------------------------------------------------------------------
# Gating
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateVerdict:
    verdict: str
    failed_gates: tuple[str, ...] = ()
    reasons: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.verdict == ACCEPTED


@dataclass(frozen=True)
class GateReport:
    verdicts: tuple[GateVerdict, ...]

    @property
    def accepted_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.verdicts) if v.accepted)

    @property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.verdicts:
            out[v.verdict] = out.get(v.verdict, 0) + 1
        return out


def _alignment_failures(db: AssessmentState,
                        rec: TypedRecord) -> list[str]:
    missing = []
    if rec.kind is RecordKind.ATTRIBUTE:
        if rec.subject not in db.entity_ids:
            missing.append(f"subject {rec.subject!r}")
        if rec.predicate not in db.attribute_type_by_id:
            missing.append(f"attribute {rec.predicate!r}")
    elif rec.kind is RecordKind.ATTITUDE:
        if rec.subject not in db.entity_ids:
            missing.append(f"holder {rec.subject!r}")
        if str(rec.object) not in db.proposition_by_id:
            missing.append(f"proposition {rec.object!r}")
    elif rec.kind is RecordKind.RELATION:
        if rec.predicate not in db.relation_type_by_id:
            missing.append(f"relation {rec.predicate!r}")
        if rec.subject not in db.entity_ids:
            missing.append(f"source {rec.subject!r}")
        if str(rec.object) not in db.entity_ids:
            missing.append(f"target {rec.object!r}")
    elif rec.kind is RecordKind.EVENT:
        if rec.subject not in db.event_by_id:
            missing.append(f"event {rec.subject!r}")
    else:
        if rec.subject not in db.entity_ids:
            missing.append(f"acting entity {rec.subject!r}")
        if rec.predicate not in db.action_type_by_id:
            missing.append(f"action type {rec.predicate!r}")
    return missing


def _constraint_failures(db: AssessmentState,
                         rec: TypedRecord) -> list[str]:
    bad = []
    if rec.kind is RecordKind.ATTITUDE:
        try:
            op = AttitudeOperator(rec.predicate)
        except ValueError:
            return [f"unknown attitude operator {rec.predicate!r}"]
        content = str(rec.object)
        is_coalition = rec.subject in db.coalition_by_id
        if (op is AttitudeOperator.COMMIT) != is_coalition:
            bad.append("commitment/holder mismatch")
        neg = db.negation_id(content)
        if neg is not None and op in (AttitudeOperator.BELIEVE,
                                      AttitudeOperator.KNOW):
            for held_op in (AttitudeOperator.BELIEVE,
                            AttitudeOperator.KNOW):
                if db.holds(rec.subject, held_op, neg):
                    bad.append(
                        f"would contradict held "
                        f"{held_op.value}({neg}) of {rec.subject}")
    elif rec.kind is RecordKind.ATTRIBUTE:
        at = db.attribute_type_by_id.get(rec.predicate)
        if at is not None:
            if at.kind is AttributeKind.NUMERIC:
                if isinstance(rec.object, bool) or not isinstance(
                        rec.object, (int, float)):
                    bad.append(f"numeric attribute got {rec.object!r}")
            elif rec.object not in at.levels:
                bad.append(f"value {rec.object!r} outside declared levels")
    elif rec.kind is RecordKind.EVENT:
        if rec.predicate not in _EVENT_FIELDS:
            bad.append(f"unknown event field {rec.predicate!r}")
        elif isinstance(rec.object, bool) or not isinstance(
                rec.object, (int, float)):
            bad.append(f"event field needs a number, got {rec.object!r}")
        elif rec.predicate in ("likelihood", "confidence") \
                and not 0.0 <= float(rec.object) <= 1.0:
            bad.append(f"event {rec.predicate} {rec.object} outside [0, 1]")
    elif rec.kind is RecordKind.OPTION:
        if not isinstance(rec.object, str) or not rec.object:
            bad.append("option id must be a non-empty string")
        elif rec.object in db.option_by_id:
            bad.append(f"option id {rec.object!r} already declared")
    return bad


def _calibration_failures(db: AssessmentState,
                          rec: TypedRecord) -> list[str]:
    bad = []
    q = rec.qualifiers
    scales = db.parameter_scales
    if isinstance(q.ell, str) and q.ell not in scales.likelihood_levels:
        bad.append(f"likelihood qualifier {q.ell!r} off scale")
    if isinstance(q.ell, (int, float)) and not isinstance(q.ell, bool) \
            and rec.kind is not RecordKind.ATTITUDE \
            and not 0.0 <= float(q.ell) <= 1.0:
        bad.append(f"likelihood qualifier {q.ell} outside [0, 1]")
    if isinstance(q.pi, str) and q.pi not in scales.intensity_levels:
        bad.append(f"intensity qualifier {q.pi!r} off scale")
    if q.vartheta is not None:
        try:
            Horizon(q.vartheta)
        except ValueError:
            bad.append(f"horizon qualifier {q.vartheta!r} unknown")
    return bad


def gate_record(record: TypedRecord, db: AssessmentState) -> GateVerdict:
    """Acceptance gates for one parsed record, in fixed order: schema
    and provenance problems reject; unresolved references and
    constraint or calibration problems route to the review queue."""
    failed: list[str] = []
    reasons: list[str] = []

    if not record.subject or not record.predicate:
        failed.append("schema_validity")
        reasons.append("subject/predicate must be non-empty")
    if not record.provenance.source \
            or record.provenance.source == "unspecified":
        failed.append("provenance_completeness")
        reasons.append("record lacks a provenance source")
    if failed:
        return GateVerdict(REJECTED, tuple(failed), tuple(reasons))

    misses = _alignment_failures(db, record)
    if misses:
        failed.append("entity_alignment")
        reasons.extend("unresolved " + m for m in misses)
    broken = _constraint_failures(db, record)
    if broken:
        failed.append("constraint_satisfaction")
        reasons.extend(broken)
    off = _calibration_failures(db, record)
    if off:
        failed.append("calibration_tag")
        reasons.extend(off)
    if failed:
        return GateVerdict(FLAGGED, tuple(failed), tuple(reasons))
    return GateVerdict(ACCEPTED)


def gate_batch(records: Sequence[TypedRecord],
               db: AssessmentState) -> GateReport:
    return GateReport(verdicts=tuple(
        gate_record(r, db) for r in records))


# ---------------------------------------------------------------------------
# Source quality
# ---------------------------------------------------------------------------

def source_quality(item: SourceItem,
                   weights: tuple[float, float, float]) -> float:
    """Weighted blend of reliability, coverage, and temporal resolution."""
    w_r, w_c, w_t = weights
    for w in weights:
        if w < 0.0:
            raise NormalizationError(f"quality weight {w} is negative")
    total = w_r + w_c + w_t
    if abs(total - 1.0) > 1e-9:
        raise NormalizationError(
            f"quality weights sum to {total!r}, not 1")
    return (w_r * item.reliability + w_c * item.coverage
            + w_t * item.temporal_resolution)


# ---------------------------------------------------------------------------
# Changeset assembly
# ---------------------------------------------------------------------------

def _record_sort_key(rec: TypedRecord) -> tuple:
    return (rec.kind.value, rec.subject, rec.predicate, str(rec.object),
            rec.time.start, rec.provenance.source,
            rec.provenance.timestamp)


def _feasibility_vocabulary(db: AssessmentState) -> tuple[set, set, set]:
    """Symbols whose change can flip an option precondition: attribute
    ids, relation ids, and (operator, content) pairs."""
    attrs: set[str] = set()
    rels: set[str] = set()
    atts: set[tuple[str, str]] = set()
    for at in db.action_types:
        for pre in at.preconditions:
            if pre.kind in ("attribute_at_least", "attribute_at_most"):
                if pre.attribute:
                    attrs.add(pre.attribute)
            elif pre.kind == "tie_exists":
                if pre.relation:
                    rels.add(pre.relation)
            elif pre.kind == "attitude_present":
                if pre.operator and pre.content:
                    atts.add((pre.operator.value, pre.content))
    return attrs, rels, atts


def _audit_entries(db: Optional[AssessmentState],
                   records: Sequence[TypedRecord]) -> tuple[AuditEntry, ...]:
    slots: dict[tuple, list[int]] = {}
    for i, rec in enumerate(records):
        slots.setdefault(
            (rec.kind.value, rec.subject, rec.predicate), []).append(i)
    disagreeing: set[int] = set()
    for members in slots.values():
        if len({str(records[i].object) for i in members}) > 1:
            disagreeing.update(members)

    central: set[int] = set()
    feasibility: set[int] = set()
    if db is not None:
        degrees = {e: db.degree(e) for e in sorted(db.entity_ids)}
        cut = median(degrees.values()) if degrees else 0
        attrs, rels, atts = _feasibility_vocabulary(db)
        for i, rec in enumerate(records):
            if degrees.get(rec.subject, 0) > cut:
                central.add(i)
            if rec.kind is RecordKind.ATTRIBUTE and rec.predicate in attrs:
                feasibility.add(i)
            elif rec.kind is RecordKind.RELATION and rec.predicate in rels:
                feasibility.add(i)
            elif rec.kind is RecordKind.ATTITUDE \
                    and (rec.predicate, str(rec.object)) in atts:
                feasibility.add(i)
            elif rec.kind is RecordKind.OPTION:
                feasibility.add(i)

    return tuple(sorted(
        (AuditEntry(
            record_index=i,
            constraint_clean=1,
            low_centrality=0 if i in central else 1,
            feasibility_neutral=0 if i in feasibility else 1,
            runs_agree=0 if i in disagreeing else 1)
         for i in range(len(records))),
        key=AuditEntry.sort_key))


@dataclass(frozen=True)
class Manifest:
    """Batch companion file: the rated sources and the extraction-run
    metadata (sorted key/value pairs, e.g. model id and configuration
    digest)."""

    sources: tuple[SourceItem, ...] = ()
    run: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", tuple(
            sorted(self.sources, key=lambda s: s.id)))
        object.__setattr__(self, "run", tuple(sorted(self.run)))

    def source(self, source_id: str) -> Optional[SourceItem]:
        for s in self.sources:
            if s.id == source_id:
                return s
        return None


def build_changeset(records: Sequence[TypedRecord],
                    verdicts: Optional[Sequence[GateVerdict]] = None,
                    trigger: Optional[str] = None,
                    *,
                    revision_policy: RevisionPolicy =
                    RevisionPolicy.RECENCY_PRIORITY,
                    manifest: Optional[Manifest] = None,
                    db: Optional[AssessmentState] = None) -> ChangeSet:
    """Deterministic fold of accepted records into a changeset. Records
    are reordered canonically, audit priorities attached, and provenance
    carried through untouched. Any record whose verdict is not accepted
    is an error, as is an empty batch."""
    if verdicts is not None:
        if len(verdicts) != len(records):
            raise UsageError(
                f"{len(verdicts)} verdicts for {len(records)} records")
        for i, v in enumerate(verdicts):
            if not v.accepted:
                raise UsageError(
                    f"record {i} is {v.verdict}, not accepted; "
                    "changesets take accepted records only")
    if not records:
        raise UsageError("changesets are non-empty; no accepted records")
    ordered = tuple(sorted(records, key=_record_sort_key))
    return ChangeSet(
        records=ordered,
        trigger=trigger,
        revision_policy=revision_policy,
        sources=manifest.sources if manifest is not None else (),
        audit=_audit_entries(db, ordered))
