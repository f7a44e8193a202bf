"""The scenario comparison space.

Trees are projected onto descriptors by declared extractors; weighted
component discrepancies (each a pseudo-metric bounded in [0,1]) sum to a
stage distance. On top sit epsilon neighborhoods, the Hausdorff lift to
bundles, and parameter sweeps reporting whether a chosen output survives
methodological variation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .errors import MissingDataError, SchemaError, UsageError
from .model import AssessmentState
from .sbafile import content_digest
from .trees import Bundle, GenerationParams, ScenarioTree, generate_tree

EXTRACTOR_KINDS = ("terminal_outcome_vector", "coalition_trajectory_flags",
                   "dominant_action_labels", "event_pattern_multiset")
DISCREPANCY_KINDS = ("normalized_l1", "zero_one", "multiset_jaccard")


@dataclass(frozen=True)
class ExtractorSpec:
    kind: str
    entities: tuple[str, ...] = ()
    value_range: Optional[tuple[float, float]] = None
    watchlists: tuple[tuple[str, tuple[str, ...]], ...] = ()
    entity: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in EXTRACTOR_KINDS:
            raise SchemaError(f"unknown extractor kind {self.kind!r}")
        if self.kind == "terminal_outcome_vector":
            if not self.entities:
                raise SchemaError(
                    "terminal_outcome_vector needs an entity list")
            if self.value_range is None \
                    or self.value_range[1] <= self.value_range[0]:
                raise SchemaError(
                    "terminal_outcome_vector needs a proper value range")
        if self.kind == "coalition_trajectory_flags" \
                and not self.watchlists:
            raise SchemaError(
                "coalition_trajectory_flags needs watchlists")


@dataclass(frozen=True)
class EncodingComponent:
    name: str
    extractor: ExtractorSpec
    discrepancy: str

    def __post_init__(self) -> None:
        if self.discrepancy not in DISCREPANCY_KINDS:
            raise SchemaError(
                f"unknown discrepancy kind {self.discrepancy!r}")


@dataclass(frozen=True)
class EncodingSpec:
    components: tuple[EncodingComponent, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise SchemaError("encoding needs at least one component")
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise SchemaError("component names must be unique")


@dataclass(frozen=True)
class DistanceSpec:
    encoding: EncodingSpec
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.encoding.components):
            raise SchemaError(
                "one weight per encoding component required")
        for w in self.weights:
            if not np.isfinite(w) or w < 0:
                raise SchemaError(
                    f"weights must be finite and non-negative, got {w}")


@dataclass(frozen=True)
class Descriptor:
    """Position-id-independent projection of one tree."""

    components: tuple[tuple[str, object], ...]

    def component(self, name: str) -> object:
        for n, v in self.components:
            if n == name:
                return v
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _mean_leaf_values(tree: ScenarioTree,
                      entities: tuple[str, ...]) -> tuple[float, ...]:
    table = {(v.entity, v.leaf): v.value for v in tree.values}
    out = []
    for entity in entities:
        acc = 0.0
        for leaf in tree.leaves:
            key = (entity, leaf)
            if key not in table:
                raise MissingDataError(
                    f"tree {tree.id!r} has no terminal value for entity "
                    f"{entity!r} at leaf {leaf!r}")
            acc += table[key]
        out.append(acc / len(tree.leaves))
    return tuple(out)


def _executed_options(tree: ScenarioTree,
                      entity: Optional[str]) -> tuple[str, ...]:
    found = set()
    for e in tree.edges:
        if e.label.kind != "option":
            continue
        if entity is not None \
                and tree.position_by_id[e.tail].label != entity:
            continue
        found.add(e.label.ref)
    return tuple(sorted(found))


def _realized_events(tree: ScenarioTree) -> tuple[tuple[str, int], ...]:
    counts: dict[str, int] = {}
    for e in tree.edges:
        if e.label.realizes_event():
            counts[e.label.ref] = counts.get(e.label.ref, 0) + 1
    return tuple(sorted(counts.items()))


def _extract(tree: ScenarioTree, spec: ExtractorSpec) -> object:
    if spec.kind == "terminal_outcome_vector":
        return _mean_leaf_values(tree, spec.entities)
    if spec.kind == "coalition_trajectory_flags":
        executed = set(_executed_options(tree, None))
        return tuple(
            (name, 1 if executed & set(watch) else 0)
            for name, watch in spec.watchlists)
    if spec.kind == "dominant_action_labels":
        return _executed_options(tree, spec.entity)
    return _realized_events(tree)


def encode_tree(tree: ScenarioTree, spec: EncodingSpec) -> Descriptor:
    """Project a tree onto the declared components. Isomorphic trees
    (same shape up to position-id renaming) produce equal descriptors."""
    return Descriptor(components=tuple(
        (c.name, _extract(tree, c.extractor))
        for c in spec.components))


# ---------------------------------------------------------------------------
# Discrepancies and distance
# ---------------------------------------------------------------------------

def _component_discrepancy(component: EncodingComponent, a: object,
                           b: object) -> float:
    kind = component.discrepancy
    if kind == "zero_one":
        return 0.0 if a == b else 1.0
    if kind == "normalized_l1":
        xs, ys = a, b
        if len(xs) != len(ys):
            raise UsageError(
                f"component {component.name!r} compares vectors of "
                "unequal length")
        lo, hi = component.extractor.value_range
        norm = len(xs) * (hi - lo)
        raw = sum(abs(x - y) for x, y in zip(xs, ys))
        return min(1.0, raw / norm)
    # multiset_jaccard over (id, count) multisets; bare label tuples
    # (e.g. executed option ids) count each label once
    def as_counts(v) -> dict:
        if all(isinstance(item, str) for item in v):
            return {item: 1 for item in v}
        return dict(v)

    ca, cb = as_counts(a), as_counts(b)
    keys = set(ca) | set(cb)
    if not keys:
        return 0.0
    num = sum(min(ca.get(k, 0), cb.get(k, 0)) for k in keys)
    den = sum(max(ca.get(k, 0), cb.get(k, 0)) for k in keys)
    return 1.0 - num / den


def component_discrepancies(a: Descriptor, b: Descriptor,
                            spec: DistanceSpec,
                            ) -> tuple[tuple[str, float, float], ...]:
    """Per-component breakdown: (name, raw discrepancy, weight)."""
    out = []
    for component, weight in zip(spec.encoding.components, spec.weights):
        raw = _component_discrepancy(
            component, a.component(component.name),
            b.component(component.name))
        out.append((component.name, raw, weight))
    return tuple(out)


def descriptor_distance(a: Descriptor, b: Descriptor,
                        spec: DistanceSpec) -> float:
    """Weighted sum of component discrepancies, defined on descriptors
    directly (no stage guard; used for cross-stage method comparisons)."""
    return sum(weight * raw
               for _, raw, weight in component_discrepancies(a, b, spec))


def tree_distance(a: ScenarioTree, b: ScenarioTree,
                  spec: DistanceSpec) -> float:
    """Stage pseudo-metric between two trees."""
    if a.stage != b.stage:
        raise UsageError(
            f"trees are from different stages ({a.stage} vs {b.stage}); "
            "the stage distance does not compare across time")
    return descriptor_distance(encode_tree(a, spec.encoding),
                               encode_tree(b, spec.encoding), spec)


def epsilon_neighborhood(tree: ScenarioTree, eps: float,
                         candidates: Sequence[ScenarioTree],
                         spec: DistanceSpec) -> tuple[ScenarioTree, ...]:
    """Candidates strictly closer than eps."""
    return tuple(c for c in candidates
                 if tree_distance(tree, c, spec) < eps)


def _directed(from_desc: Sequence[Descriptor],
              to_desc: Sequence[Descriptor],
              spec: DistanceSpec) -> float:
    return max(
        min(descriptor_distance(a, b, spec) for b in to_desc)
        for a in from_desc)


def descriptor_bundle_distance(a: Sequence[Descriptor],
                               b: Sequence[Descriptor],
                               spec: DistanceSpec) -> float:
    if not a or not b:
        raise UsageError("bundle distance is undefined on empty bundles")
    return max(_directed(a, b, spec), _directed(b, a, spec))


def bundle_distance(a: Bundle, b: Bundle, spec: DistanceSpec) -> float:
    """Hausdorff lift of the tree distance to finite bundles."""
    if not a.trees or not b.trees:
        raise UsageError("bundle distance is undefined on empty bundles")
    if a.stage != b.stage:
        raise UsageError(
            f"bundles are from different stages ({a.stage} vs {b.stage})")
    da = [encode_tree(t, spec.encoding) for t in a.trees]
    db_ = [encode_tree(t, spec.encoding) for t in b.trees]
    return descriptor_bundle_distance(da, db_, spec)


def distance_matrix(trees: Sequence[ScenarioTree],
                    spec: DistanceSpec) -> np.ndarray:
    """All pairwise distances. Vector components run through the batched
    L1 kernel; set-valued components are evaluated pairwise."""
    n = len(trees)
    descriptors = [encode_tree(t, spec.encoding) for t in trees]
    total = np.zeros((n, n), dtype=np.float64)
    for component, weight in zip(spec.encoding.components, spec.weights):
        values = [d.component(component.name) for d in descriptors]
        if component.discrepancy == "normalized_l1":
            lo, hi = component.extractor.value_range
            arr = np.asarray(values, dtype=np.float64)
            norm = arr.shape[1] * (hi - lo)
            part = np.minimum(1.0, kernels.l1_matrix(arr, arr) / norm)
        else:
            part = np.zeros((n, n), dtype=np.float64)
            for i in range(n):
                for j in range(i + 1, n):
                    d = _component_discrepancy(component, values[i],
                                               values[j])
                    part[i, j] = part[j, i] = d
        total += weight * part
    return total


# ---------------------------------------------------------------------------
# Robustness sweeps
# ---------------------------------------------------------------------------

PSI_KINDS = ("pareto_frontier_ids", "mrp_path", "mlp_path",
             "bundle_itself")


@dataclass(frozen=True)
class SweepPoint:
    """One methodological setting: either regenerate from the state with
    these generation parameters, or reuse fixed trees; optionally override
    the distance weights."""

    label: str
    generation: Optional[GenerationParams] = None
    selection_rule: str = "all"
    k: Optional[int] = None
    weights: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class SweepResult:
    label: str
    tree_ids: tuple[str, ...]
    tree_digests: tuple[str, ...]
    psi_value: object
    within_distances: tuple[tuple[str, str, float], ...]


@dataclass(frozen=True)
class SweepReport:
    psi: str
    points: tuple[SweepResult, ...]
    psi_invariant: bool
    cross_distances: tuple[tuple[str, str, float], ...]


def _labels_of(tree: ScenarioTree, edge_ids: Sequence[str]) -> tuple[str, ...]:
    return tuple(tree.edge_by_id[e].label.display() for e in edge_ids)


def _psi_of(psi: str, bundle: Bundle, evaluation=None) -> object:
    from . import solve  # deferred; solve imports this module lazily too
    if psi == "bundle_itself":
        return tuple(content_digest(t) for t in bundle.trees)
    if psi == "mrp_path":
        return tuple(
            _labels_of(t, solve.backward_induct(t).path)
            for t in bundle.trees)
    if psi == "mlp_path":
        return tuple(
            _labels_of(t, solve.mlp(t).path) for t in bundle.trees)
    if psi == "pareto_frontier_ids":
        if evaluation is None:
            raise UsageError(
                "pareto_frontier_ids needs (scenario_set, "
                "evaluation_config)")
        from . import evaluation as ev
        scenario_set, config = evaluation
        return frozenset(ev.pareto_frontier(scenario_set, config).frontier)
    raise UsageError(f"unknown output functional {psi!r}")


def robustness_sweep(db: Optional[AssessmentState],
                     grid: Sequence[SweepPoint], psi: str,
                     spec: DistanceSpec, *,
                     trees: Optional[Sequence[ScenarioTree]] = None,
                     evaluation=None,
                     tolerance: float = 0.0) -> SweepReport:
    """Evaluate the output functional at every grid point and report
    whether it is invariant across the sweep, with pairwise bundle
    distances between the per-point tree sets."""
    if psi not in PSI_KINDS:
        raise UsageError(f"unknown output functional {psi!r}")
    if not grid:
        raise UsageError("the sweep grid is empty")
    labels = [p.label for p in grid]
    if len(set(labels)) != len(labels):
        raise UsageError("sweep point labels must be unique")

    from . import solve  # deferred to avoid an import cycle

    results: list[SweepResult] = []
    bundles: list[Bundle] = []
    for point in grid:
        if point.generation is not None:
            if db is None:
                raise UsageError(
                    f"point {point.label!r} regenerates but no state "
                    "was given")
            pool = [generate_tree(db, point.generation)]
        else:
            if trees is None:
                raise UsageError(
                    f"point {point.label!r} has no generation "
                    "parameters and no fixed trees were given")
            pool = list(trees)
        bundle = solve.select_bundle(
            pool, point.selection_rule, k=point.k,
            distance_spec=spec if point.selection_rule
            == "coverage_greedy" else None)
        point_spec = spec if point.weights is None \
            else replace(spec, weights=point.weights)
        within = []
        for i, t1 in enumerate(bundle.trees):
            for t2 in bundle.trees[i + 1:]:
                within.append((t1.id, t2.id,
                               tree_distance(t1, t2, point_spec)))
        bundles.append(bundle)
        results.append(SweepResult(
            label=point.label,
            tree_ids=tuple(t.id for t in bundle.trees),
            tree_digests=tuple(content_digest(t) for t in bundle.trees),
            psi_value=_psi_of(psi, bundle, evaluation),
            within_distances=tuple(within),
        ))

    cross = []
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            d = descriptor_bundle_distance(
                [encode_tree(t, spec.encoding) for t in bundles[i].trees],
                [encode_tree(t, spec.encoding) for t in bundles[j].trees],
                spec)
            cross.append((labels[i], labels[j], d))

    if psi == "bundle_itself" and tolerance > 0.0:
        invariant = all(d <= tolerance for _, _, d in cross)
    else:
        first = results[0].psi_value
        invariant = all(r.psi_value == first for r in results)

    return SweepReport(psi=psi, points=tuple(results),
                       psi_invariant=invariant,
                       cross_distances=tuple(cross))
