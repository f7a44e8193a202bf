"""Coalition-level aggregation and stability diagnostics.

Attribute aggregation scores member levels and quantizes the score back
onto the attribute scale. Attitude aggregation applies voting rules and
per-coordinate parameter aggregation. Relation aggregation condenses the
cross-member tie set into a single weighted, signed, layered summary,
with stability checks on top: weight dispersion and sign disagreement,
per-layer coherence, and structural balance of triads.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from .errors import MissingDataError, ReferenceError_, UsageError
from .model import (
    ACTOR_OPERATORS,
    AssessmentState,
    AttitudeOperator,
    AttributeKind,
    AttributeType,
    Coalition,
    DyadicTie,
    HORIZON_ORDER,
    Horizon,
    ParameterTuple,
    QuantizerSpec,
    Scalar,
    ScoreRule,
    VisibilityKind,
)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _coalition(db: AssessmentState, coalition_id: str) -> Coalition:
    c = db.coalition_by_id.get(coalition_id)
    if c is None:
        raise ReferenceError_(f"unknown coalition {coalition_id!r}")
    return c


# ---------------------------------------------------------------------------
# Attributes
# ---------------------------------------------------------------------------

def _score(values: Sequence[float], rule: ScoreRule,
           weights: Optional[Sequence[float]]) -> float:
    if rule is ScoreRule.SUM:
        return sum(values)
    if rule is ScoreRule.MEAN:
        return sum(values) / len(values)
    if rule is ScoreRule.MAX:
        return max(values)
    if rule is ScoreRule.MIN:
        return min(values)
    if rule is ScoreRule.WEIGHTED:
        if weights is None:
            raise UsageError(
                "weighted score rule needs coalition weights")
        total = sum(weights)
        if total <= 0:
            raise UsageError("coalition weights must sum to a positive "
                             "number")
        return sum(w * v for w, v in zip(weights, values)) / total
    raise UsageError(f"unknown score rule {rule!r}")


def _quantize(score: float, attribute: AttributeType) -> Scalar:
    if attribute.kind is AttributeKind.NUMERIC:
        return score
    spec = attribute.level_map or QuantizerSpec()
    if spec.kind == "thresholds":
        for cut, level in spec.thresholds:
            if score < cut:
                return level
        return spec.thresholds[-1][1]
    # round half up against the level scalars, then clamp
    coded = [(attribute.level_scalar(lv), lv) for lv in attribute.levels]
    coded.sort(key=lambda cl: cl[0])
    if score <= coded[0][0]:
        return coded[0][1]
    if score >= coded[-1][0]:
        return coded[-1][1]
    best = coded[0]
    for code, level in coded:
        if abs(code - score) < abs(best[0] - score) or (
                abs(code - score) == abs(best[0] - score)
                and code > best[0]):
            best = (code, level)
    return best[1]


def aggregate_attribute(db: AssessmentState, coalition: str,
                        attribute: str) -> Scalar:
    """Coalition-level attribute value: score the member levels with the
    attribute's declared rule, then map the score back onto the scale."""
    c = _coalition(db, coalition)
    at = db.attribute_type_by_id.get(attribute)
    if at is None:
        raise ReferenceError_(f"unknown attribute {attribute!r}")
    if not at.aggregative:
        raise UsageError(
            f"attribute {attribute!r} is not aggregative; its coalition "
            "value is assessed directly, not computed")
    values: list[float] = []
    weights: list[float] = []
    for member in c.members:
        raw = db.attribute_value(member, attribute)
        if raw is None:
            raise MissingDataError(
                f"member {member!r} has no value for {attribute!r}")
        values.append(at.level_scalar(raw))
        w = c.weight_of(member)
        weights.append(w if w is not None else 1.0)
    rule = at.score_rule or ScoreRule.MEAN
    score = _score(values, rule,
                   weights if rule is ScoreRule.WEIGHTED else None)
    return _quantize(score, at)


# ---------------------------------------------------------------------------
# Attitudes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttitudeAggregate:
    holds: bool
    supporters: tuple[str, ...]
    params: Optional[ParameterTuple] = None
    reason: Optional[str] = None


def _lower_median(codes: list) -> object:
    codes = sorted(codes)
    return codes[(len(codes) - 1) // 2]


def _aggregate_params(db: AssessmentState,
                      records: list) -> Optional[ParameterTuple]:
    with_params = [r.params for r in records if r.params is not None]
    if not with_params:
        return None
    scales = db.parameter_scales

    def coordinate(values: list, scale_name: str):
        strings = [v for v in values if isinstance(v, str)]
        if strings and len(strings) != len(values):
            raise UsageError(
                f"mixed scale-label and numeric values on the "
                f"{scale_name} coordinate")
        if strings:
            codes = [scales.step_code(scale_name, v) for v in values]
            scale = (scales.likelihood_levels if scale_name == "likelihood"
                     else scales.intensity_levels)
            return scale[_lower_median(codes)]
        return _lower_median(values)

    ell = coordinate([p.likelihood_level for p in with_params],
                     "likelihood")
    pi = coordinate([p.intensity for p in with_params], "intensity")
    horizons = [p.horizon for p in with_params]
    counts = {h: horizons.count(h) for h in set(horizons)}
    top = max(counts.values())
    theta = min((h for h, n in counts.items() if n == top),
                key=lambda h: HORIZON_ORDER[h])
    return ParameterTuple(likelihood_level=ell, intensity=pi,
                          horizon=theta)


def aggregate_attitude(db: AssessmentState, coalition: str,
                       operator: AttitudeOperator, proposition: str,
                       rule: str = "majority") -> AttitudeAggregate:
    """Does the coalition collectively hold the attitude, under a voting
    rule over members; plus the aggregated parameter tuple (lower median
    per scaled coordinate, modal horizon with shorter-first ties)."""
    if operator not in (AttitudeOperator.BELIEVE, AttitudeOperator.WANT,
                        AttitudeOperator.INTEND):
        raise UsageError(
            f"aggregation is defined for belief, desire, and intention, "
            f"not {operator.value!r}")
    if rule not in ("majority", "unanimity", "weighted"):
        raise UsageError(f"unknown aggregation rule {rule!r}")
    c = _coalition(db, coalition)
    if proposition not in db.proposition_by_id:
        raise ReferenceError_(f"unknown proposition {proposition!r}")

    supporters = []
    records = []
    for member in c.members:
        rows = db.attitudes_held(member, operator, proposition)
        if rows:
            supporters.append(member)
            records.extend(rows)
    if not supporters:
        return AttitudeAggregate(
            holds=False, supporters=(),
            reason=f"no member of {coalition!r} holds "
                   f"{operator.value}({proposition!r})")

    if rule == "majority":
        verdict = len(supporters) * 2 > len(c.members)
    elif rule == "unanimity":
        verdict = len(supporters) == len(c.members)
    else:
        weights = {m: c.weight_of(m) for m in c.members}
        if any(w is None for w in weights.values()):
            raise UsageError(
                f"weighted rule needs declared weights on {coalition!r}")
        total = sum(weights.values())
        verdict = sum(weights[m] for m in supporters) * 2 > total

    return AttitudeAggregate(
        holds=verdict, supporters=tuple(sorted(supporters)),
        params=_aggregate_params(db, records))


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelationSummary:
    weight: float
    sign: int
    layer: Optional[str]
    layer_defined: bool
    visibility: Optional[VisibilityKind]
    tie_count: int


def _aggregate_weight(ties: Sequence[DyadicTie], rule: str) -> float:
    weights = [t.weight for t in ties]
    if rule == "mean":
        return sum(weights) / len(weights)
    if rule == "weighted_mean":
        total = sum(weights)
        if total == 0.0:
            return 0.0
        return sum(w * w for w in weights) / total
    if rule == "max":
        return max(weights)
    if rule == "min":
        return min(weights)
    raise UsageError(f"unknown weight rule {rule!r}")


def _modal_layer(ties: Sequence[DyadicTie]) -> tuple[Optional[str], bool]:
    layers = [t.layer for t in ties if t.layer is not None]
    if not layers:
        return None, False
    counts = {lv: layers.count(lv) for lv in set(layers)}
    top = max(counts.values())
    return min(lv for lv, n in counts.items() if n == top), True


def _aggregate_visibility(ties: Sequence[DyadicTie],
                          rule: str) -> Optional[VisibilityKind]:
    kinds = [t.visibility.kind for t in ties]
    if rule == "unanimity":
        return kinds[0] if len(set(kinds)) == 1 else None
    counts = {k: kinds.count(k) for k in set(kinds)}
    top = max(counts.values())
    return min((k for k, n in counts.items() if n == top),
               key=lambda k: k.value)


def aggregate_relation(db: AssessmentState, x: str, y: str, relation: str,
                       weight_rule: str = "mean",
                       visibility_rule: str = "mode") -> RelationSummary:
    """Condense the cross-member tie set between two entities into one
    summary: aggregated weight, sign of the weight-adjusted signed sum,
    modal layer, and modal (or unanimous) visibility."""
    if relation not in db.relation_type_by_id:
        raise UsageError(f"unknown relation type {relation!r}")
    if visibility_rule not in ("mode", "unanimity"):
        raise UsageError(f"unknown visibility rule {visibility_rule!r}")
    ties = db.ties_between(x, y, relation)
    if not ties:
        return RelationSummary(weight=0.0, sign=0, layer=None,
                               layer_defined=False, visibility=None,
                               tie_count=0)
    layer, defined = _modal_layer(ties)
    return RelationSummary(
        weight=_aggregate_weight(ties, weight_rule),
        sign=_sign(sum(t.weight * t.sign for t in ties)),
        layer=layer,
        layer_defined=defined,
        visibility=_aggregate_visibility(ties, visibility_rule),
        tie_count=len(ties),
    )


@dataclass(frozen=True)
class StabilityDiagnostics:
    stable: Optional[bool]
    variance: Optional[float]
    disagreement: Optional[float]
    tie_count: int


def _stability_over(ties: Sequence[DyadicTie], eps_w: float,
                    eps_sigma: float) -> StabilityDiagnostics:
    if not ties:
        return StabilityDiagnostics(stable=None, variance=None,
                                    disagreement=None, tie_count=0)
    weights = [t.weight for t in ties]
    variance = statistics.pvariance(weights)
    signs = [t.sign for t in ties]
    counts = {s: signs.count(s) for s in set(signs)}
    top = max(counts.values())
    modal = [s for s, n in counts.items() if n == top]
    if len(modal) == 1:
        modal_sign = modal[0]
    else:
        weighted = _sign(sum(t.weight * t.sign for t in ties))
        modal_sign = weighted if weighted in modal else max(modal)
    disagreement = sum(1 for s in signs if s != modal_sign) / len(signs)
    return StabilityDiagnostics(
        stable=variance < eps_w and disagreement < eps_sigma,
        variance=variance, disagreement=disagreement,
        tie_count=len(ties))


def relational_stability(db: AssessmentState, x: str, y: str,
                         relation: str, eps_w: float,
                         eps_sigma: float) -> StabilityDiagnostics:
    """Weight dispersion below eps_w and sign disagreement (fraction of
    ties off the modal sign) below eps_sigma. No ties at all gives the
    distinct no-tie outcome (stable=None)."""
    return _stability_over(db.ties_between(x, y, relation),
                           eps_w, eps_sigma)


def triad_balance(db: AssessmentState, a: str, b: str, c: str,
                  relation: str,
                  layer: Optional[str] = None) -> Optional[bool]:
    """Structural balance: product of the three aggregate dyad signs is
    positive. Any missing or neutral dyad leaves balance undefined."""
    product = 1
    for u, v in ((a, b), (b, c), (a, c)):
        ties = db.ties_between(u, v, relation, layer=layer)
        if not ties:
            return None
        s = _sign(sum(t.weight * t.sign for t in ties))
        if s == 0:
            return None
        product *= s
    return product == 1


def layer_coherence(db: AssessmentState, x: str, y: str, relation: str,
                    eps_w: float, eps_sigma: float) -> bool:
    """Every layer slice of the tie is stable or absent."""
    rt = db.relation_type_by_id.get(relation)
    layers = set(rt.layers) if rt is not None else set()
    layers.update(t.layer for t in db.ties_between(x, y, relation)
                  if t.layer is not None)
    for layer in sorted(layers):
        slice_ties = db.ties_between(x, y, relation, layer=layer)
        diag = _stability_over(slice_ties, eps_w, eps_sigma)
        if diag.stable is False:
            return False
    return True


@dataclass(frozen=True)
class StabilityConfig:
    eps_w: float = 0.05
    eps_sigma: float = 0.25
    critical_layers: tuple[str, ...] = ("Pol", "Sec")
    unbalance_threshold: float = 0.5


@dataclass(frozen=True)
class CombinedStability:
    stable: bool
    rel_stab: Optional[bool]
    layer_coherent: bool
    strong_unbalance: bool
    unbalanced_fraction: Optional[float]
    triads_evaluated: int


def combined_tie_stability(db: AssessmentState, x: str, y: str,
                           relation: str,
                           config: StabilityConfig = StabilityConfig(),
                           ) -> CombinedStability:
    """Overall tie stability: relationally stable, coherent across
    layers, and free of strong unbalance (the fraction of unbalanced
    triads involving either endpoint on a critical layer staying at or
    below the configured threshold)."""
    rel = relational_stability(db, x, y, relation,
                               config.eps_w, config.eps_sigma)
    coherent = layer_coherence(db, x, y, relation,
                               config.eps_w, config.eps_sigma)

    focal = set(db.members_of(x)) | set(db.members_of(y))
    nodes = set()
    for tie in db.ties:
        if tie.relation == relation and not tie.disputed:
            nodes.add(tie.source)
            nodes.add(tie.target)
    unbalanced = 0
    evaluated = 0
    for triple in combinations(sorted(nodes), 3):
        if not focal & set(triple):
            continue
        for layer in config.critical_layers:
            verdict = triad_balance(db, *triple, relation=relation,
                                    layer=layer)
            if verdict is None:
                continue
            evaluated += 1
            if not verdict:
                unbalanced += 1
    fraction = unbalanced / evaluated if evaluated else None
    strong = fraction is not None \
        and fraction > config.unbalance_threshold
    return CombinedStability(
        stable=bool(rel.stable) and coherent and not strong,
        rel_stab=rel.stable,
        layer_coherent=coherent,
        strong_unbalance=strong,
        unbalanced_fraction=fraction,
        triads_evaluated=evaluated,
    )


# ---------------------------------------------------------------------------
# Attitude-parameter dispersion inside a coalition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InstabilityDiagnostics:
    unstable: Optional[bool]
    ell_range: Optional[float]
    pi_range: Optional[float]
    common_horizon: Optional[Horizon]
    holders: tuple[str, ...]


def coalition_attitude_instability(db: AssessmentState, coalition: str,
                                   proposition: str, eps_ell: float,
                                   eps_pi: float,
                                   operator: Optional[AttitudeOperator]
                                   = None) -> InstabilityDiagnostics:
    """Dispersion of members' attitude parameters toward a proposition:
    unstable when the likelihood or intensity step-code range exceeds its
    tolerance, or when members share no common horizon."""
    c = _coalition(db, coalition)
    operators = [operator] if operator is not None \
        else sorted(ACTOR_OPERATORS, key=lambda o: o.value)
    scales = db.parameter_scales

    holders = []
    ells: list[float] = []
    pis: list[float] = []
    horizons: list[Horizon] = []
    for member in c.members:
        for op in operators:
            for row in db.attitudes_held(member, op, proposition):
                if row.params is None:
                    continue
                holders.append(member)
                ell = row.params.likelihood_level
                ells.append(float(scales.step_code("likelihood", ell))
                            if isinstance(ell, str) else float(ell))
                pi = row.params.intensity
                pis.append(float(scales.step_code("intensity", pi))
                           if isinstance(pi, str) else float(pi))
                horizons.append(row.params.horizon)
    if not holders:
        return InstabilityDiagnostics(unstable=None, ell_range=None,
                                      pi_range=None, common_horizon=None,
                                      holders=())
    ell_range = max(ells) - min(ells)
    pi_range = max(pis) - min(pis)
    common = horizons[0] if len(set(horizons)) == 1 else None
    unstable = ell_range > eps_ell or pi_range > eps_pi or common is None
    return InstabilityDiagnostics(
        unstable=unstable, ell_range=ell_range, pi_range=pi_range,
        common_horizon=common, holders=tuple(sorted(set(holders))))


# ---------------------------------------------------------------------------
# Crisis typology
# ---------------------------------------------------------------------------

def is_cross_domain(db: AssessmentState, coalition: str) -> bool:
    """Members carry at least two distinct domain labels."""
    c = _coalition(db, coalition)
    labels = set()
    for member in c.members:
        actor = db.actor_by_id.get(member)
        if actor is not None and actor.domain_label is not None:
            labels.add(actor.domain_label)
    return len(labels) > 1


def crisis_constraints(db: AssessmentState) -> frozenset[str]:
    """Union of the constraint packages of every active domain and
    modifier label."""
    active = {d.value for d in db.crisis_tag.domains}
    active.update(m.value for m in db.crisis_tag.modifiers)
    out: set[str] = set()
    for package in db.constraint_packages:
        if package.label in active:
            out.update(package.constraints)
    return frozenset(out)
