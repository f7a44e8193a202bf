"""Typed assessment-state data model.

An AssessmentState is a stage-indexed snapshot of everything the engine
knows: actors, coalitions, attribute values, attitudes, relations, options,
and events. States are immutable after construction; every transformation
produces a new state (see the dynamics module). All collections are stored
as canonically sorted tuples so that value equality, hashing, and serialized
byte output are stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Union

from .errors import SchemaError

Scalar = Union[str, int, float]


# ---------------------------------------------------------------------------
# Closed enumerations
# ---------------------------------------------------------------------------

class Domain(str, Enum):
    POLITICAL = "Pol"
    GEOPOLITICAL = "Geo"
    ECONOMIC = "Econ"
    SOCIETAL = "Soc"
    ORGANIZATIONAL = "Org"


class ModifierDomain(str, Enum):
    ENVIRONMENTAL = "Env"
    TECHNOLOGICAL = "Tech"
    HEALTH = "Health"


class ActorCategory(str, Enum):
    INDIVIDUAL = "individual"
    COLLECTIVE = "collective"
    INSTITUTIONAL = "institutional"
    HYBRID = "hybrid"
    ALGORITHMIC = "algorithmic"


class AttitudeOperator(str, Enum):
    """Core attitude operators. The short serialized symbols are the record
    vocabulary used in data files; code should read the member names."""

    KNOW = "K"
    BELIEVE = "B"
    WANT = "W"
    INTEND = "I"
    FEAR = "F"
    COMMIT = "Com"


ACTOR_OPERATORS = frozenset({
    AttitudeOperator.KNOW,
    AttitudeOperator.BELIEVE,
    AttitudeOperator.WANT,
    AttitudeOperator.INTEND,
    AttitudeOperator.FEAR,
})


class AttributeKind(str, Enum):
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"


class ScoreRule(str, Enum):
    SUM = "sum"
    MEAN = "mean"
    MAX = "max"
    MIN = "min"
    WEIGHTED = "weighted"


class RelationFamily(str, Enum):
    POWER_INFLUENCE = "power_influence"
    ALIGNMENT_AFFINITY = "alignment_affinity"
    AUTHORITY_OBLIGATION = "authority_obligation"
    EXCHANGE_INTERDEPENDENCE = "exchange_interdependence"
    INFORMATION_COMMUNICATION = "information_communication"
    ADVERSARIAL = "adversarial"
    MEDIATIVE_REGULATORY = "mediative_regulatory"


class VisibilityKind(str, Enum):
    OBSERVED = "observed"
    PERCEIVED = "perceived"
    SIGNALLED = "signalled"


class Horizon(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


HORIZON_ORDER = {Horizon.SHORT: 0, Horizon.MEDIUM: 1, Horizon.LONG: 2}

#: Score used when salience folds the horizon into a scalar: nearer-term
#: options score higher.
HORIZON_SCORE = {Horizon.SHORT: 1.0, Horizon.MEDIUM: 0.5, Horizon.LONG: 0.0}


class Observability(str, Enum):
    UNOBSERVED = "unobserved"
    PARTIAL = "partial"
    PUBLIC = "public"


class ActionFamily(str, Enum):
    ASSERTIVE_INFORMATIVE = "assertive_informative"
    DIRECTIVE_COERCIVE = "directive_coercive"
    COMMISSIVE_PROMISSIVE = "commissive_promissive"
    DECLARATIVE_INSTITUTIONAL = "declarative_institutional"
    EXPRESSIVE_EVALUATIVE = "expressive_evaluative"
    MEDIATIVE_COOPERATIVE = "mediative_cooperative"
    PROCEDURAL_DELIBERATIVE = "procedural_deliberative"


class ActionCategory(str, Enum):
    EPISTEMIC_INFORMATIONAL = "epistemic_informational"
    COGNITIVE_ANALYTIC = "cognitive_analytic"
    INTELLIGENCE = "intelligence"
    BEHAVIORAL_INFLUENCE = "behavioral_influence"
    THREATENING = "threatening"
    ESCALATORY = "escalatory"
    KINETIC_OPERATIONAL = "kinetic_operational"
    ECONOMIC_COERCIVE = "economic_coercive"
    COMMITMENT_GENERATING = "commitment_generating"
    OFFER_EXCHANGE = "offer_exchange"
    STATUS_ALTERING = "status_altering"
    NORMATIVE_REGULATORY = "normative_regulatory"
    RELATIONAL_EVALUATIVE = "relational_evaluative"
    SYMBOLIC_COMMUNICATIVE = "symbolic_communicative"
    NEGOTIATIVE = "negotiative"
    COALITION_TRANSFORMATIONAL = "coalition_transformational"
    VOTING_AGGREGATIVE = "voting_aggregative"
    AGENDA_SETTING = "agenda_setting"
    RATIFICATION = "ratification"


#: The closed family/category taxonomy for action types.
ACTION_TAXONOMY: dict[ActionFamily, frozenset[ActionCategory]] = {
    ActionFamily.ASSERTIVE_INFORMATIVE: frozenset({
        ActionCategory.EPISTEMIC_INFORMATIONAL,
        ActionCategory.COGNITIVE_ANALYTIC,
        ActionCategory.INTELLIGENCE,
    }),
    ActionFamily.DIRECTIVE_COERCIVE: frozenset({
        ActionCategory.BEHAVIORAL_INFLUENCE,
        ActionCategory.THREATENING,
        ActionCategory.ESCALATORY,
        ActionCategory.KINETIC_OPERATIONAL,
        ActionCategory.ECONOMIC_COERCIVE,
    }),
    ActionFamily.COMMISSIVE_PROMISSIVE: frozenset({
        ActionCategory.COMMITMENT_GENERATING,
        ActionCategory.OFFER_EXCHANGE,
    }),
    ActionFamily.DECLARATIVE_INSTITUTIONAL: frozenset({
        ActionCategory.STATUS_ALTERING,
        ActionCategory.NORMATIVE_REGULATORY,
    }),
    ActionFamily.EXPRESSIVE_EVALUATIVE: frozenset({
        ActionCategory.RELATIONAL_EVALUATIVE,
        ActionCategory.SYMBOLIC_COMMUNICATIVE,
    }),
    ActionFamily.MEDIATIVE_COOPERATIVE: frozenset({
        ActionCategory.NEGOTIATIVE,
        ActionCategory.COALITION_TRANSFORMATIONAL,
    }),
    ActionFamily.PROCEDURAL_DELIBERATIVE: frozenset({
        ActionCategory.VOTING_AGGREGATIVE,
        ActionCategory.AGENDA_SETTING,
        ActionCategory.RATIFICATION,
    }),
}


class RecordKind(str, Enum):
    ATTITUDE = "att"
    RELATION = "rel"
    EVENT = "event"
    ATTRIBUTE = "attr"
    OPTION = "option"


# ---------------------------------------------------------------------------
# Provenance and ingest records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProvenanceRecord:
    """Source metadata attached to every database assertion."""

    source: str
    span: Union[tuple[int, int], str] = "expert"
    method: str = "expert"
    timestamp: str = ""
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.source:
            raise SchemaError("provenance source must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaError(
                f"provenance confidence {self.confidence} outside [0, 1]")
        if isinstance(self.span, list):
            object.__setattr__(self, "span", tuple(self.span))


@dataclass(frozen=True)
class Qualifiers:
    """Optional graded qualifiers on an ingest record."""

    ell: Optional[Scalar] = None
    pi: Optional[Scalar] = None
    vartheta: Optional[str] = None


@dataclass(frozen=True)
class TimeSpec:
    """Empirical time of a reported fact: a point or an interval. Distinct
    from the stage index, which counts database revisions."""

    kind: str = "point"
    start: str = ""
    end: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("point", "interval"):
            raise SchemaError(f"unknown time kind {self.kind!r}")
        if self.kind == "interval" and self.end is None:
            raise SchemaError("interval time needs an end")


@dataclass(frozen=True)
class TypedRecord:
    """One extraction record: the unit the ingest gates operate on."""

    kind: RecordKind
    subject: str
    predicate: str
    object: Scalar
    qualifiers: Qualifiers = field(default_factory=Qualifiers)
    time: TimeSpec = field(default_factory=TimeSpec)
    confidence: float = 1.0
    provenance: ProvenanceRecord = field(
        default_factory=lambda: ProvenanceRecord(source="unspecified"))

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaError(
                f"record confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class SourceItem:
    """A rated source in a batch manifest."""

    id: str
    reliability: float
    coverage: float
    temporal_resolution: float

    def __post_init__(self) -> None:
        for name in ("reliability", "coverage", "temporal_resolution"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SchemaError(f"source {name} {v} outside [0, 1]")


class RevisionPolicy(str, Enum):
    SOURCE_QUALITY_PRIORITY = "source_quality_priority"
    RECENCY_PRIORITY = "recency_priority"
    RECORD_CONFLICT = "record_conflict"


@dataclass(frozen=True)
class AuditEntry:
    """Audit-queue priority signals for one record of a changeset. Lower
    sort keys review first; each flag is 0 when the urgent condition holds."""

    record_index: int
    constraint_clean: int = 1
    low_centrality: int = 1
    feasibility_neutral: int = 1
    runs_agree: int = 1

    def sort_key(self) -> tuple[int, int, int, int, int]:
        return (self.constraint_clean, self.low_centrality,
                self.feasibility_neutral, self.runs_agree,
                self.record_index)


@dataclass(frozen=True)
class ChangeSet:
    """Provenance-tagged record collection driving one stage update."""

    records: tuple[TypedRecord, ...]
    trigger: Optional[str] = None
    revision_policy: RevisionPolicy = RevisionPolicy.RECENCY_PRIORITY
    sources: tuple[SourceItem, ...] = ()
    audit: tuple[AuditEntry, ...] = ()


# ---------------------------------------------------------------------------
# Carrier sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Proposition:
    id: str
    text: str = ""
    negation_of: Optional[str] = None
    implies: tuple[str, ...] = ()
    #: Optional id of a proposition stating that this content is achievable;
    #: used by the feasibility check on intentions.
    possibility_of: Optional[str] = None


@dataclass(frozen=True)
class Actor:
    id: str
    category: ActorCategory
    domain_label: Domain
    location: Optional[str] = None


@dataclass(frozen=True)
class Coalition:
    id: str
    members: tuple[str, ...]
    #: Optional per-member weights used by weighted aggregation rules.
    weights: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(sorted(set(self.members))))
        object.__setattr__(self, "weights", tuple(sorted(self.weights)))
        if len(self.members) < 2:
            raise SchemaError(
                f"coalition {self.id!r} needs at least 2 members")

    def weight_of(self, member: str) -> Optional[float]:
        for m, w in self.weights:
            if m == member:
                return w
        return None


@dataclass(frozen=True)
class QuantizerSpec:
    """Maps an aggregation score back onto an ordinal level scale.

    round_half_up_clamp: round the score half-up to the nearest numeric
    level (or level index for non-numeric scales), then clamp to the scale
    bounds. thresholds: explicit (cut, level) pairs, first cut the score is
    strictly below wins, last level otherwise.
    """

    kind: str = "round_half_up_clamp"
    thresholds: tuple[tuple[float, Scalar], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("round_half_up_clamp", "thresholds"):
            raise SchemaError(f"unknown quantizer kind {self.kind!r}")
        if self.kind == "thresholds" and not self.thresholds:
            raise SchemaError("threshold quantizer needs thresholds")


@dataclass(frozen=True)
class AttributeType:
    id: str
    kind: AttributeKind
    levels: tuple[Scalar, ...] = ()
    aggregative: bool = False
    score_rule: Optional[ScoreRule] = None
    level_map: Optional[QuantizerSpec] = None

    def __post_init__(self) -> None:
        if self.kind is AttributeKind.ORDINAL and len(self.levels) < 2:
            raise SchemaError(
                f"ordinal attribute {self.id!r} needs at least 2 levels")
        if self.aggregative and (self.score_rule is None
                                 or self.level_map is None):
            raise SchemaError(
                f"aggregative attribute {self.id!r} needs a score rule "
                "and a level map")

    def level_index(self, value: Scalar) -> int:
        try:
            return self.levels.index(value)
        except ValueError:
            raise SchemaError(
                f"value {value!r} not a level of attribute {self.id!r}")

    def level_scalar(self, value: Scalar) -> float:
        """Numeric stand-in for a level: the level itself when the scale is
        numeric, otherwise its index."""
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        return float(self.level_index(value))


@dataclass(frozen=True)
class AttributeAssignment:
    subject: str
    attribute: str
    value: Scalar
    stage: int = 0
    provenance: ProvenanceRecord = field(
        default_factory=lambda: ProvenanceRecord(source="unspecified"))
    disputed: bool = False


@dataclass(frozen=True)
class ParameterTuple:
    """Graded qualifiers of an attitude: likelihood level, intensity level,
    horizon. The two level coordinates live on the state's declared scales."""

    likelihood_level: Scalar
    intensity: Scalar
    horizon: Horizon


@dataclass(frozen=True)
class AttitudeRecord:
    holder: str
    operator: AttitudeOperator
    content: str
    params: Optional[ParameterTuple] = None
    stage: int = 0
    provenance: ProvenanceRecord = field(
        default_factory=lambda: ProvenanceRecord(source="unspecified"))
    disputed: bool = False


@dataclass(frozen=True)
class RelationType:
    id: str
    family: RelationFamily
    directed: bool = True
    signed: bool = True
    layers: tuple[str, ...] = ()
    #: Sign a bare ingest record of this type asserts (the record template
    #: has no sign slot; the semantics live on the declared type).
    default_sign: int = 1
    default_layer: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.default_sign not in (-1, 0, 1):
            raise SchemaError("default_sign must be -1, 0, or +1")


@dataclass(frozen=True)
class Visibility:
    kind: VisibilityKind = VisibilityKind.OBSERVED
    perceived_by: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "perceived_by", tuple(sorted(self.perceived_by)))
        if (self.kind is VisibilityKind.PERCEIVED) != bool(self.perceived_by):
            raise SchemaError(
                "perceived visibility needs a perceiver set and vice versa")


@dataclass(frozen=True)
class DyadicTie:
    relation: str
    source: str
    target: str
    weight: float = 1.0
    sign: int = 0
    layer: str = ""
    visibility: Visibility = field(default_factory=Visibility)
    stage: int = 0
    provenance: ProvenanceRecord = field(
        default_factory=lambda: ProvenanceRecord(source="unspecified"))
    disputed: bool = False

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise SchemaError(f"tie sign {self.sign} must be -1, 0, or +1")


@dataclass(frozen=True)
class Hyperedge:
    relation: str
    participants: tuple[str, ...]
    weight: float = 1.0
    sign: int = 0
    layer: str = ""
    visibility: Visibility = field(default_factory=Visibility)
    stage: int = 0
    provenance: ProvenanceRecord = field(
        default_factory=lambda: ProvenanceRecord(source="unspecified"))

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "participants", tuple(sorted(set(self.participants))))
        if len(self.participants) < 3:
            raise SchemaError("hyperedges need at least 3 participants")
        if self.sign not in (-1, 0, 1):
            raise SchemaError(f"edge sign {self.sign} must be -1, 0, or +1")


# ---------------------------------------------------------------------------
# Options, actions, events
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamSpec:
    name: str
    required: bool = False


@dataclass(frozen=True)
class Roles:
    actor: bool = True
    target: bool = False
    audience: bool = False


@dataclass(frozen=True)
class Precondition:
    """One predicate over an assessment state. The subject slots accept the
    placeholders ``$actor`` and ``$target``, resolved from the option."""

    kind: str
    subject: Optional[str] = None
    attribute: Optional[str] = None
    value: Optional[Scalar] = None
    relation: Optional[str] = None
    source: Optional[str] = None
    target: Optional[str] = None
    layer: Optional[str] = None
    holder: Optional[str] = None
    operator: Optional[AttitudeOperator] = None
    content: Optional[str] = None

    KINDS = ("attribute_at_least", "attribute_at_most", "tie_exists",
             "attitude_present")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise SchemaError(f"unknown precondition kind {self.kind!r}")


@dataclass(frozen=True)
class EffectDescriptor:
    """A declared consequence of executing an action: an attribute step or
    a tie change. Subject slots accept $actor / $target placeholders."""

    kind: str
    subject: Optional[str] = None
    attribute: Optional[str] = None
    amount: float = 0.0
    relation: Optional[str] = None
    source: Optional[str] = None
    target: Optional[str] = None

    KINDS = ("attribute_step", "tie_change")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise SchemaError(f"unknown effect kind {self.kind!r}")


@dataclass(frozen=True)
class ActionType:
    id: str
    family: ActionFamily
    category: ActionCategory
    roles: Roles = field(default_factory=Roles)
    content: Optional[str] = None
    mode: str = ""
    parameters: tuple[ParamSpec, ...] = ()
    preconditions: tuple[Precondition, ...] = ()
    consequences: tuple[EffectDescriptor, ...] = ()
    reversibility: int = 0
    target_response: int = 0

    def __post_init__(self) -> None:
        if self.category not in ACTION_TAXONOMY[self.family]:
            raise SchemaError(
                f"category {self.category.value!r} does not belong to "
                f"family {self.family.value!r}")
        if self.reversibility not in (0, 1):
            raise SchemaError("reversibility is a 0/1 flag")
        if self.target_response not in (0, 1):
            raise SchemaError("target_response is a 0/1 flag")

    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def required_parameters(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters if p.required)


@dataclass(frozen=True)
class SalienceInputs:
    intensity: float = 0.0
    success_likelihood: float = 0.0
    horizon: Horizon = Horizon.MEDIUM

    def __post_init__(self) -> None:
        if not 0.0 <= self.success_likelihood <= 1.0:
            raise SchemaError(
                f"success likelihood {self.success_likelihood} "
                "outside [0, 1]")


@dataclass(frozen=True)
class OptionInstance:
    id: str
    action_type: str
    acting_entity: str
    bindings: tuple[tuple[str, str], ...] = ()
    salience_inputs: SalienceInputs = field(default_factory=SalienceInputs)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bindings", tuple(sorted(self.bindings)))

    def binding(self, name: str) -> Optional[str]:
        for key, value in self.bindings:
            if key == name:
                return value
        return None


@dataclass(frozen=True)
class ActionToken:
    option: OptionInstance
    full_bindings: tuple[tuple[str, str], ...]
    record_id: str
    timestamp: str

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "full_bindings", tuple(sorted(self.full_bindings)))


@dataclass(frozen=True)
class EventEffect:
    subject: str
    attribute: str
    amount: float


@dataclass(frozen=True)
class Event:
    id: str
    likelihood: float
    impact: float
    horizon: Horizon = Horizon.MEDIUM
    onset: float = 0.0
    duration: float = 0.0
    observability: Observability = Observability.PUBLIC
    confidence: float = 1.0
    evidence: tuple[str, ...] = ()
    footprint: tuple[str, ...] = ()
    effect_map: tuple[EventEffect, ...] = ()
    #: Extra stored-only magnitudes (e.g. cascading potential); never
    #: computed on.
    extras: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.likelihood <= 1.0:
            raise SchemaError(
                f"event {self.id!r} likelihood {self.likelihood} "
                "outside [0, 1]")
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaError(
                f"event {self.id!r} confidence {self.confidence} "
                "outside [0, 1]")
        object.__setattr__(self, "evidence", tuple(sorted(self.evidence)))
        object.__setattr__(self, "footprint", tuple(sorted(self.footprint)))
        object.__setattr__(
            self, "effect_map",
            tuple(sorted(self.effect_map,
                         key=lambda e: (e.subject, e.attribute))))
        object.__setattr__(self, "extras", tuple(sorted(self.extras)))


@dataclass(frozen=True)
class FSpec:
    """Declared monotone transform of the source event's impact magnitude
    used by trigger links: unit -> 1, abs -> |impact|, scaled_abs ->
    scale * |impact|."""

    kind: str = "unit"
    scale: float = 1.0

    KINDS = ("unit", "abs", "scaled_abs")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise SchemaError(f"unknown f-spec kind {self.kind!r}")
        if self.scale < 0:
            raise SchemaError("f-spec scale must be non-negative")

    def evaluate(self, impact: float) -> float:
        if self.kind == "unit":
            return 1.0
        if self.kind == "abs":
            return abs(impact)
        return self.scale * abs(impact)


@dataclass(frozen=True)
class TriggerLink:
    source: str
    target: str
    weight: float
    f_spec: FSpec = field(default_factory=FSpec)

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise SchemaError(
                f"trigger weight {self.weight} outside [0, 1]")


# ---------------------------------------------------------------------------
# Crisis frame and scales
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrisisTag:
    domains: tuple[Domain, ...] = ()
    modifiers: tuple[ModifierDomain, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "domains",
            tuple(sorted(set(self.domains), key=lambda d: d.value)))
        object.__setattr__(
            self, "modifiers",
            tuple(sorted(set(self.modifiers), key=lambda m: m.value)))


@dataclass(frozen=True)
class ConstraintPackage:
    """Constraint labels contributed by one domain or modifier label."""

    label: str
    constraints: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "constraints", tuple(sorted(set(self.constraints))))


@dataclass(frozen=True)
class ParameterScales:
    """Declared finite ordered scales for the attitude qualifier space."""

    likelihood_levels: tuple[Scalar, ...] = (
        "very_low", "low", "medium", "high", "very_high")
    intensity_levels: tuple[Scalar, ...] = (0, 1, 2, 3, 4, 5)

    def __post_init__(self) -> None:
        if len(self.likelihood_levels) < 2 or len(self.intensity_levels) < 2:
            raise SchemaError("parameter scales need at least 2 levels")

    def step_code(self, coordinate: str, value: Scalar) -> int:
        scale = (self.likelihood_levels if coordinate == "likelihood"
                 else self.intensity_levels)
        try:
            return scale.index(value)
        except ValueError:
            raise SchemaError(
                f"{value!r} is not a level of the {coordinate} scale")


# ---------------------------------------------------------------------------
# The assessment state
# ---------------------------------------------------------------------------

def _sorted_assignments(
        rows: tuple[AttributeAssignment, ...],
) -> tuple[AttributeAssignment, ...]:
    return tuple(sorted(
        rows,
        key=lambda r: (r.subject, r.attribute, r.stage,
                       r.provenance.timestamp, str(r.value), r.disputed)))


@dataclass(frozen=True)
class AssessmentState:
    """One stage of the scenario database. Construct through ``create`` so
    collections are canonicalized; direct construction is for internal use
    and deserialization of already-canonical data."""

    stage: int = 0
    crisis_tag: CrisisTag = field(default_factory=CrisisTag)
    parameter_scales: ParameterScales = field(default_factory=ParameterScales)
    actors: tuple[Actor, ...] = ()
    coalitions: tuple[Coalition, ...] = ()
    propositions: tuple[Proposition, ...] = ()
    attribute_types: tuple[AttributeType, ...] = ()
    assignments: tuple[AttributeAssignment, ...] = ()
    attitudes: tuple[AttitudeRecord, ...] = ()
    relation_types: tuple[RelationType, ...] = ()
    ties: tuple[DyadicTie, ...] = ()
    hyperedges: tuple[Hyperedge, ...] = ()
    action_types: tuple[ActionType, ...] = ()
    options: tuple[OptionInstance, ...] = ()
    events: tuple[Event, ...] = ()
    event_graph: tuple[TriggerLink, ...] = ()
    constraint_packages: tuple[ConstraintPackage, ...] = ()
    history_ref: Optional[str] = None

    @classmethod
    def create(cls, **kwargs) -> "AssessmentState":
        """Build a state with canonical collection order and canonical
        endpoint order on undirected ties."""
        state = cls(**kwargs)
        rel_types = {rt.id: rt for rt in state.relation_types}
        ties = []
        for tie in state.ties:
            rt = rel_types.get(tie.relation)
            if rt is not None and not rt.directed \
                    and tie.source > tie.target:
                tie = replace(tie, source=tie.target, target=tie.source)
            ties.append(tie)
        return cls(
            stage=state.stage,
            crisis_tag=state.crisis_tag,
            parameter_scales=state.parameter_scales,
            actors=tuple(sorted(state.actors, key=lambda a: a.id)),
            coalitions=tuple(sorted(state.coalitions, key=lambda c: c.id)),
            propositions=tuple(
                sorted(state.propositions, key=lambda p: p.id)),
            attribute_types=tuple(
                sorted(state.attribute_types, key=lambda t: t.id)),
            assignments=_sorted_assignments(state.assignments),
            attitudes=tuple(sorted(
                state.attitudes,
                key=lambda r: (r.holder, r.operator.value, r.content,
                               r.stage, r.provenance.timestamp, r.disputed))),
            relation_types=tuple(
                sorted(state.relation_types, key=lambda t: t.id)),
            ties=tuple(sorted(
                ties,
                key=lambda t: (t.relation, t.source, t.target, t.layer,
                               t.stage, t.provenance.timestamp, t.weight))),
            hyperedges=tuple(sorted(
                state.hyperedges,
                key=lambda h: (h.relation, h.participants, h.layer,
                               h.stage))),
            action_types=tuple(
                sorted(state.action_types, key=lambda t: t.id)),
            options=tuple(sorted(state.options, key=lambda o: o.id)),
            events=tuple(sorted(state.events, key=lambda e: e.id)),
            event_graph=tuple(sorted(
                state.event_graph,
                key=lambda l: (l.source, l.target, l.weight))),
            constraint_packages=tuple(sorted(
                state.constraint_packages, key=lambda p: p.label)),
            history_ref=state.history_ref,
        )

    def evolve(self, **changes) -> "AssessmentState":
        """Return a canonicalized copy with the given fields replaced."""
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return AssessmentState.create(**data)

    # -- indexes ------------------------------------------------------------

    @cached_property
    def actor_by_id(self) -> dict[str, Actor]:
        return {a.id: a for a in self.actors}

    @cached_property
    def coalition_by_id(self) -> dict[str, Coalition]:
        return {c.id: c for c in self.coalitions}

    @cached_property
    def proposition_by_id(self) -> dict[str, Proposition]:
        return {p.id: p for p in self.propositions}

    @cached_property
    def attribute_type_by_id(self) -> dict[str, AttributeType]:
        return {t.id: t for t in self.attribute_types}

    @cached_property
    def relation_type_by_id(self) -> dict[str, RelationType]:
        return {t.id: t for t in self.relation_types}

    @cached_property
    def action_type_by_id(self) -> dict[str, ActionType]:
        return {t.id: t for t in self.action_types}

    @cached_property
    def option_by_id(self) -> dict[str, OptionInstance]:
        return {o.id: o for o in self.options}

    @cached_property
    def event_by_id(self) -> dict[str, Event]:
        return {e.id: e for e in self.events}

    @cached_property
    def entity_ids(self) -> frozenset[str]:
        """The relational domain: actors plus coalitions."""
        return frozenset(self.actor_by_id) | frozenset(self.coalition_by_id)

    # -- lookups ------------------------------------------------------------

    def members_of(self, entity: str) -> tuple[str, ...]:
        """Member actors of a coalition, or the singleton for an actor."""
        coalition = self.coalition_by_id.get(entity)
        if coalition is not None:
            return coalition.members
        return (entity,)

    def attribute_value(self, subject: str, attribute: str) -> Optional[Scalar]:
        """Current value: the latest non-disputed assignment in canonical
        order, None when absent."""
        value = None
        for row in self.assignments:
            if (row.subject == subject and row.attribute == attribute
                    and not row.disputed):
                value = row.value
        return value

    def attitudes_held(self, holder: str, operator: AttitudeOperator,
                       content: str) -> tuple[AttitudeRecord, ...]:
        return tuple(
            r for r in self.attitudes
            if r.holder == holder and r.operator is operator
            and r.content == content and not r.disputed)

    def holds(self, holder: str, operator: AttitudeOperator,
              content: str) -> bool:
        return bool(self.attitudes_held(holder, operator, content))

    def negation_id(self, proposition: str) -> Optional[str]:
        """The declared negation partner of a proposition, looked up in
        both directions."""
        prop = self.proposition_by_id.get(proposition)
        if prop is not None and prop.negation_of is not None:
            return prop.negation_of
        for other in self.propositions:
            if other.negation_of == proposition:
                return other.id
        return None

    def ties_between(self, x: str, y: str, relation: str,
                     layer: Optional[str] = None,
                     include_disputed: bool = False,
    ) -> tuple[DyadicTie, ...]:
        """All member-level ties generating the aggregate tie between two
        entities (cross-member pairs; actors count as singletons)."""
        rt = self.relation_type_by_id.get(relation)
        left = set(self.members_of(x))
        right = set(self.members_of(y))
        found = []
        for tie in self.ties:
            if tie.relation != relation:
                continue
            if tie.disputed and not include_disputed:
                continue
            if layer is not None and tie.layer != layer:
                continue
            forward = tie.source in left and tie.target in right
            backward = tie.source in right and tie.target in left
            if forward or (backward and (rt is None or not rt.directed)):
                found.append(tie)
        return tuple(found)

    def degree(self, entity: str) -> int:
        """Number of non-disputed ties touching an entity."""
        return sum(
            1 for tie in self.ties
            if not tie.disputed and entity in (tie.source, tie.target))
