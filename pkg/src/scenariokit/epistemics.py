"""Attitude-derived queries and actor-specific views.

Aims are derived, never stored: an actor aims at a content when it wants it
and does not believe its negation. Perception views filter a state down to
what one actor can see, without ever adding records.
"""

from __future__ import annotations

from .errors import ReferenceError_
from .model import (
    AssessmentState,
    AttitudeOperator,
    Event,
    Observability,
    VisibilityKind,
)


def derive_aims(db: AssessmentState) -> frozenset[tuple[str, str]]:
    """All (actor, proposition) pairs the actor aims at: wants the content
    while not believing its declared negation."""
    aims = set()
    for record in db.attitudes:
        if record.disputed or record.operator is not AttitudeOperator.WANT:
            continue
        negation = db.negation_id(record.content)
        if negation is not None and db.holds(
                record.holder, AttitudeOperator.BELIEVE, negation):
            continue
        aims.add((record.holder, record.content))
    return frozenset(aims)


def _event_visible(event: Event, actor: str) -> bool:
    if event.observability is Observability.UNOBSERVED:
        return actor in event.evidence
    return True


def derive_perception(db: AssessmentState, actor: str) -> AssessmentState:
    """The state as one actor perceives it: unobserved events are hidden
    unless the actor holds evidence, and perceived ties are visible only to
    their perceiver set. The result is always a record subset of the input."""
    if actor not in db.actor_by_id:
        raise ReferenceError_(f"unknown actor {actor!r}")

    def tie_visible(visibility) -> bool:
        if visibility.kind is VisibilityKind.PERCEIVED:
            return actor in visibility.perceived_by
        return True

    events = tuple(e for e in db.events if _event_visible(e, actor))
    kept_event_ids = {e.id for e in events}
    return db.evolve(
        ties=tuple(t for t in db.ties if tie_visible(t.visibility)),
        hyperedges=tuple(
            h for h in db.hyperedges if tie_visible(h.visibility)),
        events=events,
        event_graph=tuple(
            link for link in db.event_graph
            if link.source in kept_event_ids
            and link.target in kept_event_ids),
    )


def affects(db: AssessmentState, actor: str, event: str) -> bool:
    """True when the actor's location lies in the event footprint."""
    result, _ = affects_with_reason(db, actor, event)
    return result


def affects_with_reason(db: AssessmentState, actor: str,
                        event: str) -> tuple[bool, str]:
    actor_obj = db.actor_by_id.get(actor)
    if actor_obj is None:
        raise ReferenceError_(f"unknown actor {actor!r}")
    event_obj = db.event_by_id.get(event)
    if event_obj is None:
        raise ReferenceError_(f"unknown event {event!r}")
    if actor_obj.location is None:
        return False, "actor has no location"
    if actor_obj.location in event_obj.footprint:
        return True, "location in footprint"
    return False, "location outside footprint"
