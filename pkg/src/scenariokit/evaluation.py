"""Scenario evaluation: per-entity utilities over terminal indicators,
coalition aggregates, declared system functionals, evaluation matrices,
Pareto frontiers, dominance graphs, in-tree coalition stability, and
conditional expected-utility thresholds.

Missing indicator values stay explicit: a utility over an unknown input
is None, never an imputed number, and scenarios with unknowns are
excluded from dominance comparisons and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .errors import MissingDataError, ReferenceError_, SchemaError, UsageError
from .trees import Edge, ScenarioTree


@dataclass(frozen=True)
class Scenario:
    """A terminal outcome described by named indicator values. None marks
    an explicitly unknown value."""

    id: str
    indicators: tuple[tuple[str, Optional[float]], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "indicators",
                           tuple(sorted(self.indicators)))
        names = [n for n, _ in self.indicators]
        if len(set(names)) != len(names):
            raise SchemaError(
                f"scenario {self.id!r} repeats an indicator")

    def value(self, indicator: str) -> Optional[float]:
        for name, v in self.indicators:
            if name == indicator:
                return v
        return None


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "scenarios",
            tuple(sorted(self.scenarios, key=lambda s: s.id)))
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate scenario ids")

    def by_id(self, scenario_id: str) -> Scenario:
        for s in self.scenarios:
            if s.id == scenario_id:
                return s
        raise ReferenceError_(f"unknown scenario {scenario_id!r}")


@dataclass(frozen=True)
class EntityUtility:
    """Linear scoring over indicators: constant + sum of coeff * value."""

    entity: str
    terms: tuple[tuple[str, float], ...]
    constant: float = 0.0


@dataclass(frozen=True)
class CoalitionUtility:
    coalition: str
    weights: tuple[tuple[str, float], ...]
    members: tuple[str, ...] = ()
    rule: str = "weighted_mean"

    def __post_init__(self) -> None:
        if self.rule not in ("weighted_mean", "min"):
            raise SchemaError(f"unknown aggregation rule {self.rule!r}")
        members = self.members or tuple(m for m, _ in self.weights)
        object.__setattr__(self, "members", tuple(sorted(members)))
        if set(m for m, _ in self.weights) != set(self.members):
            raise UsageError(
                f"coalition {self.coalition!r} weights do not match its "
                "members")


@dataclass(frozen=True)
class SystemValue:
    """An explicitly declared system-level functional over indicators."""

    terms: tuple[tuple[str, float], ...]
    constant: float = 0.0
    label: str = "system"


@dataclass(frozen=True)
class EvaluationConfig:
    utilities: tuple[EntityUtility, ...] = ()
    coalitions: tuple[CoalitionUtility, ...] = ()
    system: Optional[SystemValue] = None

    def utility_for(self, entity: str) -> EntityUtility:
        for u in self.utilities:
            if u.entity == entity:
                return u
        raise ReferenceError_(
            f"no utility declared for entity {entity!r}")

    def coalition_for(self, coalition: str) -> CoalitionUtility:
        for c in self.coalitions:
            if c.coalition == coalition:
                return c
        raise ReferenceError_(
            f"no aggregation declared for coalition {coalition!r}")


# ---------------------------------------------------------------------------
# Utilities
# ---------------------------------------------------------------------------

def _linear(scenario: Scenario, terms: tuple[tuple[str, float], ...],
            constant: float) -> Optional[float]:
    total = constant
    for indicator, coeff in terms:
        v = scenario.value(indicator)
        if v is None:
            return None
        total += coeff * v
    return total


def actor_utility(scenario: Scenario, config: EvaluationConfig,
                  entity: str) -> Optional[float]:
    """The entity's declared utility of a scenario; None when any input
    indicator is unknown."""
    spec = config.utility_for(entity)
    return _linear(scenario, spec.terms, spec.constant)


def coalition_utility(scenario: Scenario, config: EvaluationConfig,
                      coalition: str) -> Optional[float]:
    """Aggregate of member utilities under the declared rule."""
    spec = config.coalition_for(coalition)
    values = []
    weights = []
    for member, w in spec.weights:
        u = actor_utility(scenario, config, member)
        if u is None:
            return None
        values.append(u)
        weights.append(w)
    if spec.rule == "min":
        return min(values)
    total = sum(weights)
    if total <= 0:
        raise UsageError(
            f"coalition {coalition!r} weights must sum to a positive "
            "number")
    return sum(w * u for w, u in zip(weights, values)) / total


def system_value(scenario: Scenario,
                 config: EvaluationConfig) -> Optional[float]:
    """The declared system functional; refusing to default is the point."""
    if config.system is None:
        raise UsageError(
            "no system functional declared; a system evaluation must be "
            "an explicit commitment, never a default")
    return _linear(scenario, config.system.terms, config.system.constant)


@dataclass(frozen=True)
class EvaluationMatrix:
    """Entities (rows) against scenarios (columns); None entries mark
    explicitly unknown evaluations."""

    columns: tuple[str, ...]
    rows: tuple[tuple[str, tuple[Optional[float], ...]], ...]

    def entry(self, row: str, column: str) -> Optional[float]:
        j = self.columns.index(column)
        for label, values in self.rows:
            if label == row:
                return values[j]
        raise KeyError(row)


def evaluation_matrix(scenario_set: ScenarioSet,
                      config: EvaluationConfig) -> EvaluationMatrix:
    columns = tuple(s.id for s in scenario_set.scenarios)
    rows: list[tuple[str, tuple[Optional[float], ...]]] = []
    for spec in config.utilities:
        rows.append((spec.entity, tuple(
            actor_utility(s, config, spec.entity)
            for s in scenario_set.scenarios)))
    for cspec in config.coalitions:
        rows.append((cspec.coalition, tuple(
            coalition_utility(s, config, cspec.coalition)
            for s in scenario_set.scenarios)))
    if config.system is not None:
        rows.append((config.system.label, tuple(
            system_value(s, config) for s in scenario_set.scenarios)))
    return EvaluationMatrix(columns=columns, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Dominance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontierResult:
    frontier: tuple[str, ...]
    excluded: tuple[str, ...]
    entities: tuple[str, ...]


def _utility_rows(scenario_set: ScenarioSet, config: EvaluationConfig,
                  entities: tuple[str, ...],
                  ) -> tuple[list[str], list[list[float]], list[str]]:
    included_ids: list[str] = []
    rows: list[list[float]] = []
    excluded: list[str] = []
    for s in scenario_set.scenarios:
        values = [actor_utility(s, config, e) for e in entities]
        if any(v is None for v in values):
            excluded.append(s.id)
        else:
            included_ids.append(s.id)
            rows.append([float(v) for v in values])
    return included_ids, rows, excluded


def pareto_frontier(scenario_set: ScenarioSet, config: EvaluationConfig,
                    entities: Optional[Sequence[str]] = None,
                    ) -> FrontierResult:
    """Scenarios not weakly dominated (with a strict improvement) in the
    compared entities' utilities. Scenarios with unknown utilities are
    excluded from the comparison and flagged."""
    ents = tuple(entities) if entities is not None \
        else tuple(u.entity for u in config.utilities)
    if not ents:
        raise UsageError("no entities to compare")
    ids, rows, excluded = _utility_rows(scenario_set, config, ents)
    if not ids:
        return FrontierResult(frontier=(), excluded=tuple(excluded),
                              entities=ents)
    mask = kernels.pareto_mask(np.asarray(rows, dtype=np.float64))
    frontier = tuple(sorted(
        sid for sid, keep in zip(ids, mask) if keep))
    return FrontierResult(frontier=frontier, excluded=tuple(excluded),
                          entities=ents)


@dataclass(frozen=True)
class DominanceCriterion:
    kind: str  # pareto | single_actor | coalition
    entity: Optional[str] = None
    coalition: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("pareto", "single_actor", "coalition"):
            raise UsageError(f"unknown dominance criterion {self.kind!r}")
        if self.kind == "single_actor" and self.entity is None:
            raise UsageError("single_actor criterion needs an entity")
        if self.kind == "coalition" and self.coalition is None:
            raise UsageError("coalition criterion needs a coalition")


@dataclass(frozen=True)
class DominanceGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]  # (dominator, dominated)
    criterion: str
    excluded: tuple[str, ...]
    cycles: tuple[tuple[str, ...], ...]

    @property
    def non_dominated(self) -> tuple[str, ...]:
        targets = {b for _, b in self.edges}
        return tuple(n for n in self.nodes if n not in targets)


def _strongly_connected(nodes: Sequence[str],
                        edges: Sequence[tuple[str, str]],
                        ) -> tuple[tuple[str, ...], ...]:
    """Tarjan components of size > 1 (or self-loops), i.e. cycles."""
    out: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in edges:
        out[a].append(b)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    found: list[tuple[str, ...]] = []

    def visit(v: str) -> None:
        work = [(v, iter(out[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(out[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == node:
                        break
                if len(component) > 1 or (node, node) in set(edges):
                    found.append(tuple(sorted(component)))

    for n in nodes:
        if n not in index:
            visit(n)
    return tuple(sorted(found))


def dominance_graph(scenario_set: ScenarioSet, config: EvaluationConfig,
                    criterion: DominanceCriterion,
                    declared_pairs: Sequence[tuple[str, str]] = (),
                    ) -> DominanceGraph:
    """Directed dominance relation among scenarios under the criterion,
    with externally declared pairwise judgments unioned in and cycles
    reported rather than rejected."""
    if criterion.kind == "pareto":
        ents = tuple(u.entity for u in config.utilities)
        ids, rows, excluded = _utility_rows(scenario_set, config, ents)
        edges = []
        for i, a in enumerate(ids):
            for j, b in enumerate(ids):
                if i == j:
                    continue
                ge = all(x >= y for x, y in zip(rows[i], rows[j]))
                gt = any(x > y for x, y in zip(rows[i], rows[j]))
                if ge and gt:
                    edges.append((a, b))
        label = "pareto"
    else:
        if criterion.kind == "single_actor":
            def score(s: Scenario) -> Optional[float]:
                return actor_utility(s, config, criterion.entity)
            label = f"single_actor({criterion.entity})"
        else:
            def score(s: Scenario) -> Optional[float]:
                return coalition_utility(s, config, criterion.coalition)
            label = f"coalition({criterion.coalition})"
        pairs = [(s.id, score(s)) for s in scenario_set.scenarios]
        excluded = [sid for sid, v in pairs if v is None]
        known = [(sid, v) for sid, v in pairs if v is not None]
        edges = [(a, b)
                 for a, va in known for b, vb in known
                 if a != b and va > vb]

    nodes = tuple(s.id for s in scenario_set.scenarios)
    known_nodes = set(nodes)
    for a, b in declared_pairs:
        for node in (a, b):
            if node not in known_nodes:
                raise ReferenceError_(
                    f"declared judgment names unknown scenario {node!r}")
        if (a, b) not in edges:
            edges.append((a, b))
    edges_sorted = tuple(sorted(edges))
    return DominanceGraph(
        nodes=nodes, edges=edges_sorted, criterion=label,
        excluded=tuple(excluded),
        cycles=_strongly_connected(nodes, edges_sorted))


# ---------------------------------------------------------------------------
# Coalition stability inside a tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoalitionTreeVerdict:
    stable: bool
    coordination_leaf: str
    comparisons: tuple[tuple[str, float, str, float], ...]
    # (member, coordination utility, deviation leaf, deviation utility)


def _descend(tree: ScenarioTree, edge: Edge) -> str:
    """Edge head resolved to a leaf: follow the most likely continuation
    (lexicographic tie-break); an ambiguous position without likelihoods
    is an error."""
    pid = edge.head
    while not tree.is_leaf(pid):
        out = tree.outgoing[pid]
        if len(out) > 1 and any(e.likelihood is None for e in out):
            raise MissingDataError(
                f"branch outcome at {pid!r} is ambiguous: several "
                "continuations without likelihoods")
        pid = min(out, key=lambda e: (
            -(e.likelihood if e.likelihood is not None else 1.0),
            e.id)).head
    return pid


def coalition_tree_stability(
        tree: ScenarioTree, members: Sequence[str],
        utilities: Mapping[tuple[str, str], float],
        coordination_branch: str,
        deviation_branches: Mapping[str, str]) -> CoalitionTreeVerdict:
    """Coordination is supported when every member does weakly better on
    the coordinated branch's outcome than on their own deviation
    branch's outcome."""
    if coordination_branch not in tree.edge_by_id:
        raise ReferenceError_(
            f"unknown coordination branch {coordination_branch!r}")
    coord_leaf = _descend(tree, tree.edge_by_id[coordination_branch])

    def utility(member: str, leaf: str) -> float:
        key = (member, leaf)
        if key not in utilities:
            raise MissingDataError(
                f"no outcome utility for member {member!r} at leaf "
                f"{leaf!r}")
        return utilities[key]

    comparisons = []
    stable = True
    for member in sorted(members):
        branch = deviation_branches.get(member)
        if branch is None:
            continue
        if branch not in tree.edge_by_id:
            raise ReferenceError_(
                f"unknown deviation branch {branch!r} for {member!r}")
        dev_leaf = _descend(tree, tree.edge_by_id[branch])
        cu = utility(member, coord_leaf)
        du = utility(member, dev_leaf)
        comparisons.append((member, cu, dev_leaf, du))
        if cu < du:
            stable = False
    return CoalitionTreeVerdict(stable=stable,
                                coordination_leaf=coord_leaf,
                                comparisons=tuple(comparisons))


# ---------------------------------------------------------------------------
# Conditional expected-utility comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptionOutcomes:
    """An option with a binary resolution: utility on success, utility on
    failure, success probability supplied at evaluation time."""

    name: str
    on_success: float
    on_failure: float


@dataclass(frozen=True)
class ThresholdResult:
    preferred: Optional[str]  # None = indifferent
    expectations: tuple[tuple[str, float], ...]
    threshold_q: Optional[float]


def conditional_eu_threshold(first: OptionOutcomes, second: OptionOutcomes,
                             q: float, r: float) -> ThresholdResult:
    """Compare E[first | success prob q] against E[second | success prob
    r], and return the q threshold (given r) where the preference flips:
    q* such that q*·(u1s − u1f) + u1f equals the second expectation."""
    for name, p in (("q", q), ("r", r)):
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"probability {name}={p} outside [0, 1]")
    e_first = q * first.on_success + (1.0 - q) * first.on_failure
    e_second = r * second.on_success + (1.0 - r) * second.on_failure
    if e_first > e_second:
        preferred = first.name
    elif e_second > e_first:
        preferred = second.name
    else:
        preferred = None
    slope = first.on_success - first.on_failure
    threshold = (e_second - first.on_failure) / slope if slope != 0.0 \
        else None
    return ThresholdResult(
        preferred=preferred,
        expectations=((first.name, e_first), (second.name, e_second)),
        threshold_q=threshold)
