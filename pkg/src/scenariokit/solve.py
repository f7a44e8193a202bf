"""Tree solution concepts.

Strict-preference backward induction over leaf ranks, its generalization
to decision rules over world-states (expected utility, worst case,
worst-case expected utility over a prior set), most-likely-path dynamic
programming, stochastic-choice and discounting helpers, and bundle
selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence

from .errors import MissingDataError, NormalizationError, UsageError
from .model import AssessmentState
from .trees import Bundle, Edge, ScenarioTree

_PRIOR_TOL = 1e-9

EventSelector = Callable[[str, tuple[Edge, ...]], Edge]


def default_event_selector(position_id: str,
                           edges: tuple[Edge, ...]) -> Edge:
    """Pick the highest-likelihood realization, edge id breaking ties."""
    return min(edges, key=lambda e: (
        -(e.likelihood if e.likelihood is not None else 0.0), e.id))


@dataclass(frozen=True)
class Policy:
    """One chosen outgoing edge per decision position, plus the event
    realizations the solve assumed."""

    decision_choice: tuple[tuple[str, str], ...]
    event_choice: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "decision_choice",
                           tuple(sorted(self.decision_choice)))
        object.__setattr__(self, "event_choice",
                           tuple(sorted(self.event_choice)))

    @cached_property
    def decisions(self) -> dict[str, str]:
        return dict(self.decision_choice)

    @cached_property
    def events(self) -> dict[str, str]:
        return dict(self.event_choice)


@dataclass(frozen=True)
class DecisionRule:
    """How a decision position values a leaf when its consequences depend
    on an unresolved world-state."""

    kind: str
    prior: tuple[tuple[str, float], ...] = ()
    prior_set: tuple[tuple[tuple[str, float], ...], ...] = ()

    KINDS = ("strict_preference", "seu", "maximin", "maxmin_eu")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise UsageError(f"unknown decision rule {self.kind!r}")

    def _checked_prior(self, prior: tuple[tuple[str, float], ...],
                       world_states: tuple[str, ...],
                       ) -> dict[str, float]:
        table = dict(prior)
        missing = [w for w in world_states if w not in table]
        if missing:
            raise MissingDataError(
                f"prior missing world states {missing}")
        if any(p < 0.0 for p in table.values()):
            raise NormalizationError("prior has negative mass")
        total = sum(table[w] for w in world_states)
        if abs(total - 1.0) > _PRIOR_TOL:
            raise NormalizationError(
                f"prior sums to {total!r}, not 1")
        return table

    def leaf_value(self, utilities: Mapping[tuple[str, str, str], float],
                   entity: str, leaf: str,
                   world_states: tuple[str, ...]) -> float:
        def u(world: str) -> float:
            key = (entity, leaf, world)
            if key not in utilities:
                raise MissingDataError(
                    f"no utility for entity {entity!r}, leaf {leaf!r}, "
                    f"world {world!r}")
            return utilities[key]

        if self.kind == "seu":
            table = self._checked_prior(self.prior, world_states)
            return sum(table[w] * u(w) for w in world_states)
        if self.kind == "maximin":
            return min(u(w) for w in world_states)
        if self.kind == "maxmin_eu":
            if not self.prior_set:
                raise UsageError(
                    "maxmin_eu requires a non-empty prior set")
            tables = [self._checked_prior(p, world_states)
                      for p in self.prior_set]
            return min(sum(t[w] * u(w) for w in world_states)
                       for t in tables)
        raise UsageError(
            f"rule {self.kind!r} does not value leaves over world states")


@dataclass(frozen=True)
class InductionResult:
    policy: Policy
    path: tuple[str, ...]
    outcome_leaf: str
    induced_leaf: tuple[tuple[str, str], ...]

    @cached_property
    def induced(self) -> dict[str, str]:
        return dict(self.induced_leaf)


def _is_decision(tree: ScenarioTree, pid: str) -> bool:
    out = tree.outgoing[pid]
    return bool(out) and out[0].label.kind in ("option", "nonexecution")


def _induct(tree: ScenarioTree,
            leaf_value: Callable[[str, str], float],
            event_selector: EventSelector) -> InductionResult:
    """Shared backward pass: `leaf_value(entity, leaf)` scores a terminal
    outcome for the acting entity; higher is better; ties go to the
    lexicographically smallest edge id."""
    order = sorted(tree.positions, key=lambda p: -p.depth)
    induced: dict[str, str] = {}
    decision_choice: list[tuple[str, str]] = []
    event_choice: list[tuple[str, str]] = []
    for pos in order:
        out = tree.outgoing[pos.id]
        if not out:
            induced[pos.id] = pos.id
            continue
        if _is_decision(tree, pos.id):
            entity = pos.label
            best_edge: Optional[Edge] = None
            best_value = -math.inf
            for edge in out:  # sorted by id; strict > keeps the first
                value = leaf_value(entity, induced[edge.head])
                if value > best_value:
                    best_value = value
                    best_edge = edge
            assert best_edge is not None
            decision_choice.append((pos.id, best_edge.id))
            induced[pos.id] = induced[best_edge.head]
        else:
            edge = event_selector(pos.id, out)
            if edge.tail != pos.id:
                raise UsageError(
                    f"event selector returned edge {edge.id!r} not "
                    f"outgoing from {pos.id!r}")
            event_choice.append((pos.id, edge.id))
            induced[pos.id] = induced[edge.head]

    policy = Policy(decision_choice=tuple(decision_choice),
                    event_choice=tuple(event_choice))
    path = induced_path(tree, policy)
    return InductionResult(
        policy=policy,
        path=tuple(e.id for e in path),
        outcome_leaf=induced[tree.root],
        induced_leaf=tuple(sorted(induced.items())),
    )


def backward_induct(tree: ScenarioTree,
                    ranks: Optional[Mapping[tuple[str, str], int]] = None,
                    event_selector: EventSelector = default_event_selector,
                    ) -> InductionResult:
    """Strict-preference induction over per-entity leaf ranks (higher rank
    preferred). Event positions are resolved by the selector."""
    if ranks is None:
        ranks = {(r.entity, r.leaf): r.rank for r in tree.ranks}

    def leaf_value(entity: str, leaf: str) -> float:
        key = (entity, leaf)
        if key not in ranks:
            raise MissingDataError(
                f"no rank for entity {entity!r} at leaf {leaf!r}")
        return float(ranks[key])

    return _induct(tree, leaf_value, event_selector)


def mrp_under_uncertainty(tree: ScenarioTree,
                          utilities: Mapping[tuple[str, str, str], float],
                          rule: DecisionRule,
                          world_states: Sequence[str],
                          event_selector: EventSelector =
                          default_event_selector) -> InductionResult:
    """Backward induction where leaf worth is the rule's aggregate of
    world-state-contingent utilities."""
    worlds = tuple(world_states)
    if not worlds:
        raise UsageError("world_states must be non-empty")
    if rule.kind == "strict_preference":
        raise UsageError(
            "strict_preference consumes ranks; use backward_induct")

    def leaf_value(entity: str, leaf: str) -> float:
        return rule.leaf_value(utilities, entity, leaf, worlds)

    return _induct(tree, leaf_value, event_selector)


def induced_path(tree: ScenarioTree, policy: Policy) -> tuple[Edge, ...]:
    """Walk the policy from the root to its terminal outcome."""
    pid = tree.root
    walked: list[Edge] = []
    while not tree.is_leaf(pid):
        table = policy.decisions if _is_decision(tree, pid) \
            else policy.events
        if pid not in table:
            raise MissingDataError(
                f"policy undefined at reachable position {pid!r}")
        edge = tree.edge_by_id.get(table[pid])
        if edge is None or edge.tail != pid:
            raise UsageError(
                f"policy names edge {table[pid]!r}, which is not an "
                f"outgoing edge of {pid!r}")
        walked.append(edge)
        pid = edge.head
    return tuple(walked)


# ---------------------------------------------------------------------------
# Most likely path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MlpResult:
    paths: tuple[tuple[str, ...], ...]
    value: float
    j_values: tuple[tuple[str, float], ...]

    @cached_property
    def j(self) -> dict[str, float]:
        return dict(self.j_values)

    @property
    def path(self) -> tuple[str, ...]:
        return self.paths[0]


def _max_continuation(tree: ScenarioTree) -> dict[str, float]:
    j: dict[str, float] = {}
    for pos in sorted(tree.positions, key=lambda p: -p.depth):
        out = tree.outgoing[pos.id]
        if not out:
            j[pos.id] = 1.0
            continue
        j[pos.id] = max(e.likelihood * j[e.head] for e in out)
    return j


def mlp(tree: ScenarioTree, tiebreak: str = "lexicographic",
        secondary: Optional[Callable[[Edge], float]] = None) -> MlpResult:
    """Most likely root-to-leaf path by maximal continuation likelihood.

    ``tiebreak`` picks among equally likely paths: the lexicographically
    smallest edge id sequence, a secondary edge score (then edge id), or
    all maximizers."""
    if tiebreak not in ("lexicographic", "secondary", "set_valued"):
        raise UsageError(f"unknown tie break {tiebreak!r}")
    if tiebreak == "secondary" and secondary is None:
        raise UsageError("secondary tie break needs a scoring function")
    tree.check_likelihoods()
    j = _max_continuation(tree)

    def argmax_edges(pid: str) -> list[Edge]:
        out = tree.outgoing[pid]
        return [e for e in out if e.likelihood * j[e.head] == j[pid]]

    if tiebreak == "set_valued":
        paths: list[tuple[str, ...]] = []

        def walk(pid: str, prefix: tuple[str, ...]) -> None:
            if tree.is_leaf(pid):
                paths.append(prefix)
                return
            for edge in argmax_edges(pid):
                walk(edge.head, prefix + (edge.id,))

        walk(tree.root, ())
        chosen = tuple(sorted(paths))
    else:
        pid = tree.root
        ids: list[str] = []
        while not tree.is_leaf(pid):
            candidates = argmax_edges(pid)
            if tiebreak == "secondary":
                edge = min(candidates,
                           key=lambda e: (-secondary(e), e.id))
            else:
                edge = min(candidates, key=lambda e: e.id)
            ids.append(edge.id)
            pid = edge.head
        chosen = (tuple(ids),)

    return MlpResult(paths=chosen, value=j[tree.root],
                     j_values=tuple(sorted(j.items())))


# ---------------------------------------------------------------------------
# Stochastic choice and discounting
# ---------------------------------------------------------------------------

def quantal_response(utilities: Mapping[str, float],
                     lam: float) -> dict[str, float]:
    """Logit choice probabilities over options."""
    if not utilities:
        raise UsageError("no options to choose among")
    if lam < 0.0:
        raise UsageError(f"rationality parameter must be >= 0, got {lam}")
    keys = sorted(utilities)
    top = max(utilities[k] for k in keys)
    weights = {k: math.exp(lam * (utilities[k] - top)) for k in keys}
    total = sum(weights[k] for k in keys)
    return {k: weights[k] / total for k in keys}


def discounted_total(stage_utilities: Sequence[float],
                     delta: float) -> float:
    """Sum of utilities discounted geometrically from stage zero."""
    if not 0.0 < delta <= 1.0:
        raise UsageError(f"discount factor must be in (0, 1], got {delta}")
    return sum(u * delta ** t for t, u in enumerate(stage_utilities))


# ---------------------------------------------------------------------------
# Bundle selection and root scoring
# ---------------------------------------------------------------------------

def root_continuation_likelihood(tree: ScenarioTree) -> float:
    tree.check_likelihoods()
    return _max_continuation(tree)[tree.root]


def select_bundle(trees: Sequence[ScenarioTree], rule: str,
                  k: Optional[int] = None,
                  distance_spec=None) -> Bundle:
    """Pick a subset of same-stage trees.

    ``all`` keeps everything; ``top_k_by_root_J`` keeps the k trees with
    the highest root continuation likelihood; ``coverage_greedy`` seeds
    with the best tree and then grows by farthest-first traversal under
    the given distance."""
    trees = list(trees)
    if not trees:
        raise UsageError("no trees to select from")
    stages = {t.stage for t in trees}
    if len(stages) > 1:
        raise UsageError(f"trees span stages {sorted(stages)}")
    stage = trees[0].stage

    if rule == "all":
        return Bundle(stage=stage, trees=tuple(trees),
                      selection_rule="all")
    if k is None or k < 1:
        raise UsageError(f"rule {rule!r} needs k >= 1")
    k = min(k, len(trees))

    scored = sorted(trees, key=lambda t: (
        -root_continuation_likelihood(t), t.id))
    if rule == "top_k_by_root_J":
        return Bundle(stage=stage, trees=tuple(scored[:k]),
                      selection_rule=rule)
    if rule == "coverage_greedy":
        if distance_spec is None:
            raise UsageError("coverage_greedy needs a distance spec")
        from . import space  # deferred: space depends on trees only
        selected = [scored[0]]
        remaining = {t.id: t for t in scored[1:]}
        while len(selected) < k and remaining:
            def spread(t: ScenarioTree) -> float:
                return min(space.tree_distance(t, s, distance_spec)
                           for s in selected)
            best = min(remaining.values(),
                       key=lambda t: (-spread(t), t.id))
            selected.append(best)
            del remaining[best.id]
        return Bundle(stage=stage, trees=tuple(selected),
                      selection_rule=rule)
    raise UsageError(f"unknown selection rule {rule!r}")


@dataclass(frozen=True)
class RootScoreWeights:
    likelihood: float = 0.0
    impact_magnitude: float = 0.0
    degree: float = 0.0


def score_root(db: AssessmentState,
               weights: RootScoreWeights) -> tuple[tuple[str, float], ...]:
    """Rank candidate tree roots (actors, coalitions, events) by a
    weighted feature sum: event likelihood, absolute event impact, and
    degree centrality in the tie graph."""
    rows: list[tuple[str, float]] = []
    for actor in db.actors:
        rows.append((actor.id, weights.degree * db.degree(actor.id)))
    for coalition in db.coalitions:
        rows.append((coalition.id,
                     weights.degree * db.degree(coalition.id)))
    for event in db.events:
        rows.append((event.id,
                     weights.likelihood * event.likelihood
                     + weights.impact_magnitude * abs(event.impact)))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return tuple(rows)


@dataclass(frozen=True)
class DecisionConfig:
    """Serializable solve settings for the command line."""

    rule: str = "strict_preference"
    world_states: tuple[str, ...] = ()
    prior: tuple[tuple[str, float], ...] = ()
    prior_set: tuple[tuple[tuple[str, float], ...], ...] = ()
    utilities: tuple[tuple[str, str, str, float], ...] = ()
    tiebreak: str = "lexicographic"

    def decision_rule(self) -> DecisionRule:
        return DecisionRule(kind=self.rule, prior=self.prior,
                            prior_set=self.prior_set)

    def utility_table(self) -> dict[tuple[str, str, str], float]:
        return {(e, leaf, w): u for e, leaf, w, u in self.utilities}
