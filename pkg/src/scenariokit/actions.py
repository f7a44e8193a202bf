"""Option instantiation, action tokens, precondition evaluation, and the
strict refinement order between action types.

An option is an action type bound to an acting entity with a partial
parameter assignment; a token is the fully bound, time-stamped execution
record. Preconditions are small declarative predicates over an assessment
state; the placeholders ``$actor`` and ``$target`` are resolved against the
option before evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BindingError, CycleError, ReferenceError_, SchemaError
from .model import (
    ActionToken,
    ActionType,
    AssessmentState,
    AttributeKind,
    EffectDescriptor,
    OptionInstance,
    Precondition,
    SalienceInputs,
)


def instantiate_option(action_type: ActionType, acting_entity: str,
                       bindings: dict[str, str] | None = None,
                       option_id: str | None = None,
                       salience_inputs: SalienceInputs | None = None,
                       ) -> OptionInstance:
    """Create an option from an action type. Bindings may cover any subset
    of the declared parameters; undeclared names are rejected."""
    bindings = dict(bindings or {})
    declared = set(action_type.parameter_names())
    unknown = sorted(set(bindings) - declared)
    if unknown:
        raise BindingError(
            f"parameters {unknown} are not declared by action type "
            f"{action_type.id!r}")
    return OptionInstance(
        id=option_id or f"{acting_entity}.{action_type.id}",
        action_type=action_type.id,
        acting_entity=acting_entity,
        bindings=tuple(sorted(bindings.items())),
        salience_inputs=salience_inputs or SalienceInputs(),
    )


def bind_action(action_type: ActionType, option: OptionInstance,
                remaining_bindings: dict[str, str] | None = None,
                *, record_id: str, timestamp: str) -> ActionToken:
    """Complete an option into an executable token. Every parameter the
    action type marks required must be bound by the option or here; the
    caller supplies the timestamp and record id explicitly."""
    if option.action_type != action_type.id:
        raise BindingError(
            f"option {option.id!r} instantiates {option.action_type!r}, "
            f"not {action_type.id!r}")
    merged = dict(option.bindings)
    for name, value in (remaining_bindings or {}).items():
        if name not in set(action_type.parameter_names()):
            raise BindingError(
                f"parameter {name!r} is not declared by action type "
                f"{action_type.id!r}")
        merged[name] = value
    missing = sorted(set(action_type.required_parameters()) - set(merged))
    if missing:
        raise BindingError(
            f"required parameters {missing} unbound for option "
            f"{option.id!r}")
    return ActionToken(
        option=option,
        full_bindings=tuple(sorted(merged.items())),
        record_id=record_id,
        timestamp=timestamp,
    )


def resolve_subject(value: str | None, acting_entity: str,
                    bindings: dict[str, str]) -> str | None:
    if value == "$actor":
        return acting_entity
    if value == "$target":
        target = bindings.get("target")
        if target is None:
            raise BindingError(
                "the $target placeholder needs a 'target' binding")
        return target
    return value


def eval_precondition(db: AssessmentState, pred: Precondition,
                      acting_entity: str,
                      bindings: dict[str, str] | None = None) -> bool:
    """Evaluate one precondition against a state."""
    bindings = dict(bindings or {})

    def sub(value):
        return resolve_subject(value, acting_entity, bindings)

    if pred.kind in ("attribute_at_least", "attribute_at_most"):
        subject = sub(pred.subject)
        atype = db.attribute_type_by_id.get(pred.attribute)
        if atype is None:
            raise ReferenceError_(
                f"precondition references unknown attribute "
                f"{pred.attribute!r}")
        current = db.attribute_value(subject, pred.attribute)
        if current is None:
            return False
        have = atype.level_scalar(current)
        want = atype.level_scalar(pred.value)
        return have >= want if pred.kind == "attribute_at_least" \
            else have <= want
    if pred.kind == "tie_exists":
        ties = db.ties_between(sub(pred.source), sub(pred.target),
                               pred.relation, layer=pred.layer)
        return bool(ties)
    if pred.kind == "attitude_present":
        return db.holds(sub(pred.holder), pred.operator, pred.content)
    raise SchemaError(f"unknown precondition kind {pred.kind!r}")


def preconditions_hold(db: AssessmentState, option: OptionInstance) -> bool:
    action_type = db.action_type_by_id.get(option.action_type)
    if action_type is None:
        raise ReferenceError_(
            f"option {option.id!r} references unknown action type "
            f"{option.action_type!r}")
    bindings = dict(option.bindings)
    return all(
        eval_precondition(db, pred, option.acting_entity, bindings)
        for pred in action_type.preconditions)


def resolved_effects(db: AssessmentState, option: OptionInstance,
                     ) -> tuple[EffectDescriptor, ...]:
    """The option's declared consequences with placeholders substituted."""
    action_type = db.action_type_by_id.get(option.action_type)
    if action_type is None:
        raise ReferenceError_(
            f"option {option.id!r} references unknown action type "
            f"{option.action_type!r}")
    bindings = dict(option.bindings)
    out = []
    for eff in action_type.consequences:
        out.append(EffectDescriptor(
            kind=eff.kind,
            subject=resolve_subject(
                eff.subject, option.acting_entity, bindings),
            attribute=eff.attribute,
            amount=eff.amount,
            relation=eff.relation,
            source=resolve_subject(
                eff.source, option.acting_entity, bindings),
            target=resolve_subject(
                eff.target, option.acting_entity, bindings),
        ))
    return tuple(out)


def option_impacts(db: AssessmentState,
                   option: OptionInstance) -> dict[str, float]:
    """Per-entity impact magnitude of executing an option: absolute
    attribute steps plus a unit per changed tie endpoint."""
    impacts: dict[str, float] = {}
    for eff in resolved_effects(db, option):
        if eff.kind == "attribute_step":
            impacts[eff.subject] = impacts.get(eff.subject, 0.0) \
                + abs(eff.amount)
        else:
            for endpoint in (eff.source, eff.target):
                if endpoint is not None:
                    impacts[endpoint] = impacts.get(endpoint, 0.0) + 1.0
    return impacts


def event_impacts(db: AssessmentState, event_id: str) -> dict[str, float]:
    """Per-entity impact magnitude of an event's effect map."""
    event = db.event_by_id.get(event_id)
    if event is None:
        raise ReferenceError_(f"unknown event {event_id!r}")
    impacts: dict[str, float] = {}
    for eff in event.effect_map:
        impacts[eff.subject] = impacts.get(eff.subject, 0.0) \
            + abs(eff.amount)
    return impacts


@dataclass
class ByClosure:
    """The strict partial order 'one performs X by performing Y' over
    action types. Maintains a DAG; queries answer over the transitive
    closure."""

    action_types: tuple[str, ...] = ()
    _edges: dict[str, set[str]] = field(default_factory=dict)

    def insert(self, coarse: str, fine: str) -> None:
        """Declare that ``coarse`` is performed by performing ``fine``."""
        for name in (coarse, fine):
            if self.action_types and name not in self.action_types:
                raise ReferenceError_(f"unknown action type {name!r}")
        if coarse == fine or self.precedes(fine, coarse):
            raise CycleError(
                f"inserting by({coarse}, {fine}) would create a cycle")
        self._edges.setdefault(coarse, set()).add(fine)

    def precedes(self, coarse: str, fine: str) -> bool:
        """True when a chain of declared refinements leads from ``coarse``
        to ``fine``. Irreflexive by construction."""
        if coarse == fine:
            return False
        seen = set()
        stack = [coarse]
        while stack:
            node = stack.pop()
            for nxt in self._edges.get(node, ()):
                if nxt == fine:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False


def by_closure(action_types: tuple[str, ...] = (),
               by_edges: tuple[tuple[str, str], ...] = ()) -> ByClosure:
    order = ByClosure(action_types=tuple(action_types))
    for coarse, fine in by_edges:
        order.insert(coarse, fine)
    return order
