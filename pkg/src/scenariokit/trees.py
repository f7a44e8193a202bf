"""Scenario trees: structure, generation from an assessment state, and
admissibility checking.

A tree is a rooted labeled structure. Positions carry the acting entity or
the pending event; edges carry an option execution, an option non-execution
marker, or an event outcome, plus an optional conditional likelihood.
Trees are immutable and canonically ordered, so value equality and
serialization are stable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

from . import actions
from .errors import NormalizationError, ReferenceError_, SchemaError, UsageError
from .model import (
    AssessmentState,
    HORIZON_SCORE,
    OptionInstance,
)

OCCURS = "occurs"
NOT_OCCURS = "not_occurs"
_LIKELIHOOD_TOL = 1e-9


@dataclass(frozen=True)
class Position:
    id: str
    label: str
    depth: int

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise SchemaError("position depth must be non-negative")


@dataclass(frozen=True)
class EdgeLabel:
    """What a transition means: executing an option, explicitly not
    executing it, or an event outcome."""

    kind: str
    ref: str
    outcome: Optional[str] = None

    KINDS = ("option", "nonexecution", "event_outcome")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise SchemaError(f"unknown edge label kind {self.kind!r}")
        if self.kind == "event_outcome":
            if self.outcome not in (OCCURS, NOT_OCCURS):
                raise SchemaError(
                    f"event outcome must be {OCCURS!r} or {NOT_OCCURS!r}")
        elif self.outcome is not None:
            raise SchemaError(
                f"{self.kind} labels carry no outcome")

    def display(self) -> str:
        if self.kind == "option":
            return self.ref
        if self.kind == "nonexecution":
            return f"¬{self.ref}"
        if self.outcome == OCCURS:
            return f"{self.ref}°"
        return f"¬{self.ref}°"

    def executes_option(self) -> bool:
        return self.kind == "option"

    def realizes_event(self) -> bool:
        return self.kind == "event_outcome" and self.outcome == OCCURS


def option_label(option_id: str) -> EdgeLabel:
    return EdgeLabel(kind="option", ref=option_id)


def nonexecution_label(option_id: str) -> EdgeLabel:
    return EdgeLabel(kind="nonexecution", ref=option_id)


def event_label(event_id: str, outcome: str) -> EdgeLabel:
    return EdgeLabel(kind="event_outcome", ref=event_id, outcome=outcome)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    label: EdgeLabel
    likelihood: Optional[float] = None

    def __post_init__(self) -> None:
        if self.likelihood is not None \
                and not 0.0 <= self.likelihood <= 1.0:
            raise SchemaError(
                f"edge {self.id!r} likelihood {self.likelihood} "
                "outside [0, 1]")


@dataclass(frozen=True)
class LeafValue:
    entity: str
    leaf: str
    value: float


@dataclass(frozen=True)
class LeafRank:
    entity: str
    leaf: str
    rank: int


@dataclass(frozen=True)
class SalienceWeights:
    """Coefficients of the default salience functional: a weighted sum of
    the option's intensity, success likelihood, and horizon score. With
    ``normalize`` set, intensity is min-max normalized over the state's
    option set before weighting."""

    intensity: float = 1.0
    success_likelihood: float = 1.0
    horizon: float = 1.0
    normalize: bool = True


@dataclass(frozen=True)
class GenerationParams:
    root_label: str
    tree_id: str = "tree"
    salience_threshold: float = 0.0
    salience_weights: SalienceWeights = field(default_factory=SalienceWeights)
    event_inclusion_threshold: float = 0.0
    max_depth: int = 4
    max_branching: int = 8
    binary_option_convention: bool = False
    include_root_nonoccurrence: bool = False
    allow_repeats: bool = False

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise SchemaError("max depth must be non-negative")
        if self.max_branching < 1:
            raise SchemaError("max branching must be at least 1")


@dataclass(frozen=True)
class ScenarioTree:
    id: str
    stage: int
    root: str
    positions: tuple[Position, ...]
    edges: tuple[Edge, ...]
    values: tuple[LeafValue, ...] = ()
    ranks: tuple[LeafRank, ...] = ()
    params: Optional[GenerationParams] = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "positions",
            tuple(sorted(self.positions, key=lambda p: p.id)))
        object.__setattr__(
            self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))
        object.__setattr__(
            self, "values",
            tuple(sorted(self.values, key=lambda v: (v.entity, v.leaf))))
        object.__setattr__(
            self, "ranks",
            tuple(sorted(self.ranks, key=lambda r: (r.entity, r.leaf))))
        self._check_shape()

    def _check_shape(self) -> None:
        ids = [p.id for p in self.positions]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate position ids")
        byid = {p.id: p for p in self.positions}
        if self.root not in byid:
            raise SchemaError(f"root {self.root!r} is not a position")
        edge_ids = [e.id for e in self.edges]
        if len(set(edge_ids)) != len(edge_ids):
            raise SchemaError("duplicate edge ids")
        parents: dict[str, str] = {}
        for e in self.edges:
            if e.tail not in byid or e.head not in byid:
                raise SchemaError(f"edge {e.id!r} has a dangling endpoint")
            if e.head in parents:
                raise SchemaError(
                    f"position {e.head!r} has more than one parent")
            if e.head == self.root:
                raise SchemaError("the root cannot have a parent")
            parents[e.head] = e.tail
        for p in self.positions:
            if p.id != self.root and p.id not in parents:
                raise SchemaError(f"position {p.id!r} is unreachable")
        for p in self.positions:
            expected = 0 if p.id == self.root \
                else byid[parents[p.id]].depth + 1
            if p.depth != expected:
                raise SchemaError(
                    f"position {p.id!r} has depth {p.depth}, "
                    f"expected {expected}")

    @cached_property
    def position_by_id(self) -> dict[str, Position]:
        return {p.id: p for p in self.positions}

    @cached_property
    def edge_by_id(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def outgoing(self) -> dict[str, tuple[Edge, ...]]:
        table: dict[str, list[Edge]] = {p.id: [] for p in self.positions}
        for e in self.edges:
            table[e.tail].append(e)
        return {pid: tuple(sorted(es, key=lambda e: e.id))
                for pid, es in table.items()}

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.positions
                     if not self.outgoing[p.id])

    def is_leaf(self, position_id: str) -> bool:
        return not self.outgoing[position_id]

    def paths(self) -> tuple[tuple[Edge, ...], ...]:
        """All root-to-leaf edge sequences, in deterministic order."""
        found: list[tuple[Edge, ...]] = []

        def walk(pid: str, prefix: tuple[Edge, ...]) -> None:
            out = self.outgoing[pid]
            if not out:
                found.append(prefix)
                return
            for edge in out:
                walk(edge.head, prefix + (edge,))

        walk(self.root, ())
        return tuple(found)

    def value_of(self, entity: str, leaf: str) -> Optional[float]:
        for v in self.values:
            if v.entity == entity and v.leaf == leaf:
                return v.value
        return None

    def rank_of(self, entity: str, leaf: str) -> Optional[int]:
        for r in self.ranks:
            if r.entity == entity and r.leaf == leaf:
                return r.rank
        return None

    def check_likelihoods(self) -> None:
        """Require every non-leaf position's outgoing likelihoods to be
        present and to sum to one."""
        for p in self.positions:
            out = self.outgoing[p.id]
            if not out:
                continue
            if any(e.likelihood is None for e in out):
                raise NormalizationError(
                    f"position {p.id!r} has edges without likelihoods")
            total = sum(e.likelihood for e in out)
            if abs(total - 1.0) > _LIKELIHOOD_TOL:
                raise NormalizationError(
                    f"position {p.id!r} outgoing likelihoods sum to "
                    f"{total!r}, not 1")

    def with_renamed_positions(self,
                               mapping: dict[str, str]) -> "ScenarioTree":
        """Isomorphic copy with position ids renamed (labels preserved)."""

        def m(pid: str) -> str:
            return mapping.get(pid, pid)

        return ScenarioTree(
            id=self.id,
            stage=self.stage,
            root=m(self.root),
            positions=tuple(replace(p, id=m(p.id)) for p in self.positions),
            edges=tuple(
                replace(e, tail=m(e.tail), head=m(e.head))
                for e in self.edges),
            values=tuple(
                replace(v, leaf=m(v.leaf)) for v in self.values),
            ranks=tuple(
                replace(r, leaf=m(r.leaf)) for r in self.ranks),
            params=self.params,
        )


@dataclass(frozen=True)
class Bundle:
    """A finite selected set of trees at one stage."""

    stage: int
    trees: tuple[ScenarioTree, ...]
    selection_rule: str = "all"

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "trees", tuple(sorted(self.trees, key=lambda t: t.id)))
        for tree in self.trees:
            if tree.stage != self.stage:
                raise UsageError(
                    f"tree {tree.id!r} is from stage {tree.stage}, "
                    f"bundle is stage {self.stage}")


# ---------------------------------------------------------------------------
# Salience and option availability
# ---------------------------------------------------------------------------

def option_salience(db: AssessmentState, option: OptionInstance,
                    weights: SalienceWeights) -> float:
    """Scalar salience of an option: weighted sum of intensity, success
    likelihood, and horizon score."""
    s = option.salience_inputs
    intensity = s.intensity
    if weights.normalize:
        pool = [o.salience_inputs.intensity for o in db.options]
        lo, hi = min(pool), max(pool)
        intensity = 0.0 if hi == lo else (intensity - lo) / (hi - lo)
    return (weights.intensity * intensity
            + weights.success_likelihood * s.success_likelihood
            + weights.horizon * HORIZON_SCORE[s.horizon])


def available_options(db: AssessmentState, entity: str,
                      binary: bool = False,
                      ) -> tuple[tuple[OptionInstance, bool], ...]:
    """Options the entity can execute now, as (option, negated) branches.
    Under the binary convention each available option contributes both its
    execution and its explicit non-execution."""
    if entity not in db.entity_ids:
        raise ReferenceError_(f"unknown entity {entity!r}")
    branches: list[tuple[OptionInstance, bool]] = []
    for option in db.options:
        if option.acting_entity != entity:
            continue
        if not actions.preconditions_hold(db, option):
            continue
        branches.append((option, False))
        if binary:
            branches.append((option, True))
    return tuple(branches)


def select_next_entity(db: AssessmentState, position_label: str,
                       last_transition_effects: dict[str, float],
                       ) -> Optional[str]:
    """The entity most affected by the preceding transition, ties broken
    lexicographically. None signals termination (no impact anywhere)."""
    candidates = [(entity, magnitude)
                  for entity, magnitude in last_transition_effects.items()
                  if magnitude > 0.0 and entity in db.entity_ids]
    if not candidates:
        return None
    return min(candidates, key=lambda kv: (-kv[1], kv[0]))[0]


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _boosted_likelihood(db: AssessmentState, source_event: str,
                        target_event: str) -> float:
    base = db.event_by_id[target_event].likelihood
    impact = db.event_by_id[source_event].impact
    boost = 0.0
    for link in db.event_graph:
        if link.source == source_event and link.target == target_event:
            boost += link.weight * link.f_spec.evaluate(impact)
    return min(1.0, max(0.0, base + boost))


def _triggered_next(db: AssessmentState, realized_event: str,
                    seen_events: frozenset[str],
                    threshold: float) -> Optional[tuple[str, float]]:
    candidates = []
    for link in db.event_graph:
        if link.source != realized_event:
            continue
        if link.target in seen_events or link.target not in db.event_by_id:
            continue
        boosted = _boosted_likelihood(db, realized_event, link.target)
        if boosted >= threshold:
            candidates.append((link.target, boosted))
    if not candidates:
        return None
    return min(candidates, key=lambda kv: (-kv[1], kv[0]))


def generate_tree(db: AssessmentState,
                  params: GenerationParams) -> ScenarioTree:
    """Expand a scenario tree from the given root label.

    Decision positions branch over the acting entity's available options
    whose salience clears the threshold (the binary convention instead
    branches execute/not-execute on the single most salient option). Event
    positions branch over outcome realizations whose probability clears the
    event inclusion threshold, renormalized. Expansion stops at the depth
    budget, on an empty eligible set, or when a transition has no impact.
    By default an option or event already used on the path is not eligible
    again.
    """
    if params.root_label not in db.entity_ids \
            and params.root_label not in db.event_by_id:
        raise ReferenceError_(f"unknown root label {params.root_label!r}")

    positions: list[Position] = []
    edges: list[Edge] = []
    counter = 0

    def new_position(label: str, depth: int) -> Position:
        nonlocal counter
        pos = Position(id=f"n{counter}", label=label, depth=depth)
        counter += 1
        positions.append(pos)
        return pos

    root = new_position(params.root_label, 0)
    # Each frontier entry: (position, executed option ids on path,
    # event ids already visited on path, boosted likelihood override)
    frontier: list[tuple[Position, frozenset[str], frozenset[str],
                         Optional[float]]] = [
        (root, frozenset(),
         frozenset([params.root_label])
         if params.root_label in db.event_by_id else frozenset(),
         None)]

    def push_edge(tail: Position, label: EdgeLabel,
                  likelihood: Optional[float], head_label: str,
                  ) -> Position:
        head = new_position(head_label, tail.depth + 1)
        edges.append(Edge(
            id=f"g{len(edges)}", tail=tail.id, head=head.id,
            label=label, likelihood=likelihood))
        return head

    while frontier:
        pos, used_options, seen_events, boosted = frontier.pop(0)
        if pos.depth >= params.max_depth:
            continue

        if pos.label in db.event_by_id:
            event = db.event_by_id[pos.label]
            likelihood = boosted if boosted is not None \
                else event.likelihood
            if pos.id == root.id and not params.include_root_nonoccurrence:
                outcomes = [(OCCURS, 1.0)]
            else:
                outcomes = [(OCCURS, likelihood),
                            (NOT_OCCURS, 1.0 - likelihood)]
                outcomes = [
                    (name, p) for name, p in outcomes
                    if p >= params.event_inclusion_threshold]
                outcomes = outcomes[:params.max_branching]
                total = sum(p for _, p in outcomes)
                if not outcomes or total <= 0.0:
                    continue
                outcomes = [(name, p / total) for name, p in outcomes]
            for name, p in outcomes:
                if name == NOT_OCCURS:
                    push_edge(pos, event_label(event.id, name), p,
                              head_label=pos.label)
                    continue
                realized = seen_events | {event.id}
                nxt = _triggered_next(db, event.id, realized,
                                      params.event_inclusion_threshold)
                if nxt is not None:
                    head = push_edge(pos, event_label(event.id, name), p,
                                     head_label=nxt[0])
                    frontier.append((head, used_options,
                                     realized | {nxt[0]}, nxt[1]))
                    continue
                impacts = actions.event_impacts(db, event.id)
                follower = select_next_entity(db, pos.label, impacts)
                if follower is None:
                    push_edge(pos, event_label(event.id, name), p,
                              head_label=pos.label)
                    continue
                head = push_edge(pos, event_label(event.id, name), p,
                                 head_label=follower)
                frontier.append((head, used_options, realized, None))
            continue

        # Decision position.
        branches = [
            (option, negated)
            for option, negated in available_options(
                db, pos.label, binary=params.binary_option_convention)
            if params.allow_repeats or option.id not in used_options]
        scored = []
        for option, negated in branches:
            salience = option_salience(db, option, params.salience_weights)
            if salience >= params.salience_threshold:
                scored.append((option, negated, salience))
        if not scored:
            if pos.id == root.id:
                warnings.warn(
                    f"no admissible branches at root {pos.label!r}; "
                    "returning a degenerate single-position tree",
                    RuntimeWarning, stacklevel=2)
            continue

        if params.binary_option_convention:
            best = min(scored, key=lambda t: (-t[2], t[0].id))[0]
            chosen = [(best, False), (best, True)]
            likelihoods = [best.salience_inputs.success_likelihood,
                           1.0 - best.salience_inputs.success_likelihood]
        else:
            executions = sorted(
                (t for t in scored if not t[1]),
                key=lambda t: (-t[2], t[0].id))[:params.max_branching]
            chosen = [(option, False) for option, _, _ in executions]
            raw = [option.salience_inputs.success_likelihood
                   for option, _ in chosen]
            total = sum(raw)
            likelihoods = [p / total for p in raw] if total > 0.0 \
                else [1.0 / len(chosen)] * len(chosen)

        for (option, negated), p in zip(chosen, likelihoods):
            if negated:
                push_edge(pos, nonexecution_label(option.id), p,
                          head_label=pos.label)
                continue
            impacts = actions.option_impacts(db, option)
            follower = select_next_entity(db, pos.label, impacts)
            head = push_edge(pos, option_label(option.id), p,
                             head_label=follower if follower is not None
                             else pos.label)
            if follower is not None:
                frontier.append((head, used_options | {option.id},
                                 seen_events, None))

    return ScenarioTree(
        id=params.tree_id,
        stage=db.stage,
        root=root.id,
        positions=tuple(positions),
        edges=tuple(edges),
        params=params,
    )


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------

def check_admissible(tree: ScenarioTree, db: AssessmentState,
                     params: Optional[GenerationParams] = None,
                     ) -> tuple[bool, tuple[str, ...]]:
    """Verify every edge against the state: options must exist with holding
    preconditions and clear the salience threshold; events must exist and
    clear the inclusion threshold. Threshold checks run when generation
    parameters are known (passed in or stored on the tree)."""
    params = params or tree.params
    violations: list[str] = []
    for edge in tree.edges:
        label = edge.label
        if label.kind in ("option", "nonexecution"):
            option = db.option_by_id.get(label.ref)
            if option is None:
                violations.append(
                    f"edge {edge.id}: option {label.ref!r} not in the "
                    "option set")
                continue
            tail_label = tree.position_by_id[edge.tail].label
            if option.acting_entity != tail_label:
                violations.append(
                    f"edge {edge.id}: option {label.ref!r} belongs to "
                    f"{option.acting_entity!r}, position is labeled "
                    f"{tail_label!r}")
            if not actions.preconditions_hold(db, option):
                violations.append(
                    f"edge {edge.id}: preconditions of option "
                    f"{label.ref!r} do not hold")
            if params is not None:
                salience = option_salience(
                    db, option, params.salience_weights)
                if salience < params.salience_threshold:
                    violations.append(
                        f"edge {edge.id}: option {label.ref!r} salience "
                        f"{salience} below threshold "
                        f"{params.salience_threshold}")
        else:
            event = db.event_by_id.get(label.ref)
            if event is None:
                violations.append(
                    f"edge {edge.id}: event {label.ref!r} not in the "
                    "event set")
                continue
            if params is not None and \
                    event.likelihood < params.event_inclusion_threshold:
                violations.append(
                    f"edge {edge.id}: event {label.ref!r} likelihood "
                    f"{event.likelihood} below inclusion threshold "
                    f"{params.event_inclusion_threshold}")
    return not violations, tuple(violations)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def to_dot(tree: ScenarioTree,
           mrp_edges: frozenset[str] = frozenset(),
           mlp_edges: frozenset[str] = frozenset()) -> str:
    """Graphviz rendering. Edges on the most rational path are drawn bold
    red, edges on the most likely path dashed blue, shared edges both."""
    lines = ["digraph scenario_tree {", "  rankdir=TB;"]
    for p in tree.positions:
        shape = "box" if tree.is_leaf(p.id) else "ellipse"
        lines.append(
            f'  "{p.id}" [label="{p.label}" shape={shape}];')
    for e in tree.edges:
        attrs = [f'label="{e.label.display()}"']
        if e.likelihood is not None:
            attrs.append(f'taillabel="{e.likelihood:g}"')
        if e.id in mrp_edges:
            attrs.append('color=red penwidth=2')
        if e.id in mlp_edges:
            attrs.append('style=dashed fontcolor=blue')
        lines.append(
            f'  "{e.tail}" -> "{e.head}" [{" ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
