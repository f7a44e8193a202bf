"""Stage updates, event effects, regeneration, and history chains."""

import warnings

import pytest

from scenariokit.dynamics import (
    MethodGrid,
    MethodParams,
    TraceConfig,
    adaptive_likelihood_update,
    apply_event_effect,
    apply_update,
    calibrate_parameter,
    history_trace,
    noncommutativity_check,
    regenerate_bundle,
    trigger_cascade,
)
from scenariokit.errors import (
    ChainError,
    MissingDataError,
    ReferenceError_,
    UsageError,
)
from scenariokit.model import (
    ActionCategory,
    ActionFamily,
    ActionType,
    Actor,
    ActorCategory,
    AssessmentState,
    AttitudeOperator,
    AttitudeRecord,
    AttributeAssignment,
    AttributeKind,
    AttributeType,
    ChangeSet,
    Domain,
    EffectDescriptor,
    Event,
    EventEffect,
    FSpec,
    OptionInstance,
    Precondition,
    Proposition,
    ProvenanceRecord,
    Qualifiers,
    RecordKind,
    RelationFamily,
    RelationType,
    RevisionPolicy,
    SalienceInputs,
    SourceItem,
    TimeSpec,
    TriggerLink,
    TypedRecord,
)
from scenariokit.sbafile import content_digest
from scenariokit.space import (
    DistanceSpec,
    EncodingComponent,
    EncodingSpec,
    ExtractorSpec,
)
from scenariokit.trees import GenerationParams, SalienceWeights

PROV = ProvenanceRecord(source="expert", timestamp="2026-01-01")


def mk_db():
    """Two actors, an ordinal threat scale, a gated strike option, and a
    two-event trigger graph."""
    press = ActionType(
        id="press", family=ActionFamily.DIRECTIVE_COERCIVE,
        category=ActionCategory.THREATENING,
        consequences=(EffectDescriptor(
            kind="attribute_step", subject="a", attribute="threat",
            amount=1.0),))
    strike = ActionType(
        id="strike", family=ActionFamily.DIRECTIVE_COERCIVE,
        category=ActionCategory.ESCALATORY,
        preconditions=(Precondition(
            kind="attribute_at_least", subject="b", attribute="threat",
            value=3),),
        consequences=(EffectDescriptor(
            kind="attribute_step", subject="b", attribute="threat",
            amount=-1.0),))
    return AssessmentState.create(
        stage=0,
        actors=(Actor("a", ActorCategory.INSTITUTIONAL, Domain.POLITICAL),
                Actor("b", ActorCategory.INSTITUTIONAL, Domain.POLITICAL)),
        propositions=(Proposition(id="p_mod"),
                      Proposition(id="p_rad", negation_of="p_mod")),
        attribute_types=(AttributeType(
            id="threat", kind=AttributeKind.ORDINAL,
            levels=(0, 1, 2, 3, 4, 5)),),
        relation_types=(RelationType(
            id="backs", family=RelationFamily.ALIGNMENT_AFFINITY,
            layers=("political",), default_layer="political"),),
        assignments=(AttributeAssignment("b", "threat", 2, 0, PROV),),
        attitudes=(AttitudeRecord(
            holder="a", operator=AttitudeOperator.BELIEVE,
            content="p_mod", stage=0, provenance=PROV),),
        action_types=(press, strike),
        options=(
            OptionInstance("o_a", "strike", "a",
                           salience_inputs=SalienceInputs(3, 0.6)),
            OptionInstance("o_b", "press", "b",
                           salience_inputs=SalienceInputs(2, 0.5)),
            OptionInstance("o_bp", "press", "b",
                           salience_inputs=SalienceInputs(1, 0.8)),
        ),
        events=(Event(id="e1", likelihood=0.7, impact=1.0,
                      effect_map=(EventEffect("b", "threat", 1.0),)),
                Event(id="e2", likelihood=0.2, impact=0.5)),
        event_graph=(TriggerLink("e1", "e2", 0.3, FSpec("unit")),),
    )


@pytest.fixture
def db():
    return mk_db()


def _attr_record(subject="b", value=4, source="s1", day="2026-01-02"):
    return TypedRecord(
        RecordKind.ATTRIBUTE, subject, "threat", value,
        time=TimeSpec(start=day),
        provenance=ProvenanceRecord(source=source, timestamp=day))


METHOD = MethodParams(name="m0", generation=(GenerationParams(
    root_label="b", tree_id="t_b", salience_threshold=1.5,
    salience_weights=SalienceWeights(1.0, 1.0, 0.0, normalize=False),
    max_depth=2, max_branching=4),))

SPEC = DistanceSpec(
    encoding=EncodingSpec(components=(
        EncodingComponent(
            name="acts",
            extractor=ExtractorSpec(kind="dominant_action_labels"),
            discrepancy="multiset_jaccard"),)),
    weights=(1.0,))


class TestScalarRules:
    def test_adaptive_blend(self):
        assert adaptive_likelihood_update(0.4, 0.8, 0.25) == pytest.approx(
            0.5, abs=1e-12)
        assert adaptive_likelihood_update(0.3, 0.3, 0.9) == pytest.approx(
            0.3, abs=1e-12)

    def test_adaptive_rejects_out_of_range(self):
        with pytest.raises(UsageError):
            adaptive_likelihood_update(1.2, 0.5, 0.5)
        with pytest.raises(UsageError):
            adaptive_likelihood_update(0.5, -0.1, 0.5)
        with pytest.raises(UsageError):
            adaptive_likelihood_update(0.5, 0.5, 1.1)

    def test_calibration_step(self):
        assert calibrate_parameter(1.0, 2.0, 0.5) == pytest.approx(1.5)
        with pytest.raises(UsageError):
            calibrate_parameter(1.0, 2.0, -0.2)

    def test_cascade_bumps_one_hop_targets(self, db):
        out = trigger_cascade(db.event_graph, "e1",
                              {"e1": 0.2, "e2": 0.2}, impact=4.0)
        assert out["e2"] == pytest.approx(0.5)
        assert out["e1"] == 0.2

    def test_cascade_clamps_to_unit_interval(self, db):
        out = trigger_cascade(db.event_graph, "e1",
                              {"e1": 1.0, "e2": 0.9}, impact=4.0)
        assert out["e2"] == 1.0

    def test_cascade_impact_transforms(self):
        graph = (TriggerLink("e1", "e2", 0.1, FSpec("abs")),
                 TriggerLink("e1", "e3", 0.1, FSpec("scaled_abs", 0.5)))
        out = trigger_cascade(graph, "e1", {"e1": 0.5, "e2": 0.0,
                                            "e3": 0.0}, impact=-4.0)
        assert out["e2"] == pytest.approx(0.4)
        assert out["e3"] == pytest.approx(0.2)

    def test_cascade_unknown_references(self, db):
        with pytest.raises(ReferenceError_):
            trigger_cascade(db.event_graph, "nope", {"e1": 0.1},
                            impact=1.0)
        with pytest.raises(ReferenceError_):
            trigger_cascade(db.event_graph, "e1", {"e1": 0.1}, impact=1.0)


class TestEventEffects:
    def test_ordinal_step(self, db):
        assert apply_event_effect(db, "e1").attribute_value(
            "b", "threat") == 3
        assert db.attribute_value("b", "threat") == 2

    def test_repeated_steps_stay_visible_and_clamp(self, db):
        # each application must outrank the previous row in recency,
        # and the scale top is a hard ceiling
        cur = db
        seen = []
        for _ in range(5):
            cur = apply_event_effect(cur, "e1")
            seen.append(cur.attribute_value("b", "threat"))
        assert seen == [3, 4, 5, 5, 5]

    def test_non_occurrence_is_identity(self, db):
        assert apply_event_effect(db, "e1", "not_occurs") is db

    def test_effectless_event_is_identity(self, db):
        assert apply_event_effect(db, "e2") is db

    def test_unknown_event(self, db):
        with pytest.raises(ReferenceError_):
            apply_event_effect(db, "e9")

    def test_undeclared_attribute(self):
        broken = AssessmentState.create(
            stage=0,
            actors=(Actor("a", ActorCategory.INDIVIDUAL,
                          Domain.POLITICAL),),
            events=(Event(id="e", likelihood=0.5, impact=1.0,
                          effect_map=(EventEffect("a", "ghost", 1.0),)),))
        with pytest.raises(ReferenceError_):
            apply_event_effect(broken, "e")

    def test_missing_current_value(self, db):
        ev = Event(id="e3", likelihood=0.5, impact=1.0,
                   effect_map=(EventEffect("a", "threat", 1.0),))
        cur = db.evolve(events=db.events + (ev,))
        with pytest.raises(MissingDataError):
            apply_event_effect(cur, "e3")

    def test_numeric_attribute_shifts_additively(self):
        st = AssessmentState.create(
            stage=0,
            actors=(Actor("a", ActorCategory.INDIVIDUAL,
                          Domain.ECONOMIC),),
            attribute_types=(AttributeType(
                id="gdp", kind=AttributeKind.NUMERIC),),
            assignments=(AttributeAssignment("a", "gdp", 1.5, 0, PROV),),
            events=(Event(id="e", likelihood=0.5, impact=1.0,
                          effect_map=(EventEffect("a", "gdp", -0.25),)),))
        assert apply_event_effect(st, "e").attribute_value(
            "a", "gdp") == pytest.approx(1.25)


class TestApplyUpdate:
    def test_applies_records_and_advances_stage(self, db):
        cs = ChangeSet(records=(
            _attr_record(),
            TypedRecord(RecordKind.ATTITUDE, "a", "B", "p_rad",
                        time=TimeSpec(start="2026-01-02"),
                        provenance=ProvenanceRecord(
                            source="s1", timestamp="2026-01-02")),
        ))
        nxt, log = apply_update(db, cs)
        assert nxt.stage == 1
        assert nxt.history_ref == content_digest(db)
        assert log.history_ref == content_digest(db)
        assert nxt.attribute_value("b", "threat") == 4
        assert log.counts == {"applied": 2}
        assert db.attribute_value("b", "threat") == 2

    def test_contrary_attitude_disputes_the_held_one(self, db):
        cs = ChangeSet(records=(
            TypedRecord(RecordKind.ATTITUDE, "a", "B", "p_rad",
                        provenance=PROV),))
        nxt, log = apply_update(db, cs)
        assert nxt.holds("a", AttitudeOperator.BELIEVE, "p_rad")
        assert not nxt.holds("a", AttitudeOperator.BELIEVE, "p_mod")
        assert any("contradicts" in c for c in log.conflicts)

    def test_feasibility_flip_is_reported(self, db):
        nxt, log = apply_update(db, ChangeSet(records=(_attr_record(),)))
        assert ("o_a", False, True) in log.feasibility_changes

    def test_recency_priority(self, db):
        cs = ChangeSet(records=(
            _attr_record(value=3, source="s2", day="2026-01-01"),
            _attr_record(value=4, source="s1", day="2026-01-02"),
        ))
        nxt, log = apply_update(db, cs)
        assert nxt.attribute_value("b", "threat") == 4
        assert log.status_of(0) == "superseded"
        assert log.status_of(1) == "applied"

    def test_recency_tie_disputes_all_winners(self, db):
        cs = ChangeSet(records=(
            _attr_record(value=3, source="s2"),
            _attr_record(value=4, source="s1"),
        ))
        nxt, log = apply_update(db, cs)
        assert log.counts == {"disputed": 2}
        assert nxt.attribute_value("b", "threat") == 2

    def test_record_conflict_policy(self, db):
        cs = ChangeSet(
            records=(_attr_record(value=3, day="2026-01-01"),
                     _attr_record(value=4, day="2026-01-02")),
            revision_policy=RevisionPolicy.RECORD_CONFLICT)
        nxt, log = apply_update(db, cs)
        assert log.counts == {"disputed": 2}
        assert nxt.attribute_value("b", "threat") == 2

    def test_source_quality_priority(self, db):
        cs = ChangeSet(
            records=(_attr_record(value=3, source="s2",
                                  day="2026-01-01"),
                     _attr_record(value=4, source="s1",
                                  day="2026-01-02")),
            revision_policy=RevisionPolicy.SOURCE_QUALITY_PRIORITY,
            sources=(SourceItem("s1", 0.2, 0.2, 0.2),
                     SourceItem("s2", 0.9, 0.9, 0.9)))
        nxt, log = apply_update(db, cs)
        assert nxt.attribute_value("b", "threat") == 3
        assert log.status_of(0) == "applied"
        assert log.status_of(1) == "superseded"

    def test_unrated_source_falls_back_to_record_confidence(self, db):
        low = TypedRecord(
            RecordKind.ATTRIBUTE, "b", "threat", 3, confidence=0.95,
            provenance=ProvenanceRecord(source="unrated",
                                        timestamp="2026-01-01"))
        cs = ChangeSet(
            records=(low, _attr_record(value=4, source="s2")),
            revision_policy=RevisionPolicy.SOURCE_QUALITY_PRIORITY,
            sources=(SourceItem("s2", 0.5, 0.5, 0.5),))
        nxt, _ = apply_update(db, cs)
        assert nxt.attribute_value("b", "threat") == 3

    def test_rejections_do_not_block_valid_records(self, db):
        cs = ChangeSet(records=(
            TypedRecord(RecordKind.ATTRIBUTE, "zz", "threat", 4,
                        provenance=PROV),
            TypedRecord(RecordKind.ATTRIBUTE, "b", "threat", 9,
                        provenance=PROV),
            TypedRecord(RecordKind.ATTRIBUTE, "b", "threat", 4),
            TypedRecord(RecordKind.EVENT, "e2", "likelihood", 0.35,
                        provenance=PROV),
        ))
        nxt, log = apply_update(db, cs)
        assert log.counts == {"rejected": 3, "applied": 1}
        assert "unknown subject" in log.dispositions[0].reason
        assert "outside the levels" in log.dispositions[1].reason
        assert "provenance source" in log.dispositions[2].reason
        assert nxt.event_by_id["e2"].likelihood == 0.35
        assert nxt.attribute_value("b", "threat") == 2

    @pytest.mark.parametrize("record,fragment", [
        (TypedRecord(RecordKind.ATTITUDE, "a", "Believes?", "p_mod",
                     provenance=PROV), "unknown attitude operator"),
        (TypedRecord(RecordKind.ATTITUDE, "a", "B", "ghost",
                     provenance=PROV), "unknown proposition"),
        (TypedRecord(RecordKind.ATTITUDE, "a", "Com", "p_mod",
                     provenance=PROV), "coalition"),
        (TypedRecord(RecordKind.EVENT, "e2", "color", 1.0,
                     provenance=PROV), "unknown event field"),
        (TypedRecord(RecordKind.EVENT, "e2", "likelihood", 1.5,
                     provenance=PROV), "outside [0, 1]"),
        (TypedRecord(RecordKind.EVENT, "e2", "impact", True,
                     provenance=PROV), "needs a number"),
        (TypedRecord(RecordKind.OPTION, "b", "press", "o_b",
                     provenance=PROV), "already declared"),
        (TypedRecord(RecordKind.OPTION, "b", "nuke", "o_new",
                     provenance=PROV), "unknown action type"),
        (TypedRecord(RecordKind.RELATION, "a", "rivals", "b",
                     provenance=PROV), "unknown relation"),
    ])
    def test_single_record_rejections(self, db, record, fragment):
        _, log = apply_update(db, ChangeSet(records=(record,)))
        assert log.status_of(0) == "rejected"
        assert fragment in log.dispositions[0].reason

    def test_option_record_instantiates_option(self, db):
        cs = ChangeSet(records=(TypedRecord(
            RecordKind.OPTION, "a", "press", "o_a2",
            qualifiers=Qualifiers(ell=0.4, pi=2.0),
            provenance=PROV),))
        nxt, log = apply_update(db, cs)
        assert log.counts == {"applied": 1}
        opt = nxt.option_by_id["o_a2"]
        assert opt.acting_entity == "a"
        assert opt.action_type == "press"
        assert opt.salience_inputs.success_likelihood == 0.4
        assert opt.salience_inputs.intensity == 2.0

    def test_relation_record_creates_tie(self, db):
        cs = ChangeSet(records=(TypedRecord(
            RecordKind.RELATION, "a", "backs", "b",
            qualifiers=Qualifiers(ell=0.7), provenance=PROV),))
        nxt, _ = apply_update(db, cs)
        ties = nxt.ties_between("a", "b", "backs")
        assert len(ties) == 1
        tie = ties[0]
        assert tie.weight == 0.7
        assert tie.sign == 1
        assert tie.layer == "political"
        assert tie.stage == 1

    def test_trigger_materializes_effects_and_cascade(self, db):
        cs = ChangeSet(records=(_attr_record(),), trigger="e1")
        nxt, log = apply_update(db, cs)
        assert nxt.attribute_value("b", "threat") == 5
        assert nxt.event_by_id["e2"].likelihood == pytest.approx(0.5)
        assert any(n.startswith("cascade") for n in log.event_notes)
        assert any(n.startswith("effect of e1") for n in log.event_notes)

    def test_undeclared_trigger_noted_and_ignored(self, db):
        cs = ChangeSet(records=(_attr_record(),), trigger="e9")
        nxt, log = apply_update(db, cs)
        assert any("ignored" in n for n in log.event_notes)
        assert nxt.attribute_value("b", "threat") == 4

    def test_empty_changeset_refused(self, db):
        with pytest.raises(UsageError):
            apply_update(db, ChangeSet(records=()))

    def test_status_of_unknown_index(self, db):
        _, log = apply_update(db, ChangeSet(records=(_attr_record(),)))
        with pytest.raises(ReferenceError_):
            log.status_of(7)

    def test_attitude_qualifiers_become_params(self, db):
        cs = ChangeSet(records=(TypedRecord(
            RecordKind.ATTITUDE, "b", "W", "p_mod",
            qualifiers=Qualifiers(ell="high", pi=4, vartheta="long"),
            provenance=PROV),))
        nxt, _ = apply_update(db, cs)
        row = [r for r in nxt.attitudes if r.holder == "b"][0]
        assert row.params.likelihood_level == "high"
        assert row.params.intensity == 4
        assert row.params.horizon.value == "long"


class TestRegeneration:
    def test_generates_only_feasible_salient_options(self, db):
        bundle = regenerate_bundle(db, METHOD)
        assert [t.id for t in bundle.trees] == ["t_b"]
        labels = {e.label.ref for t in bundle.trees for e in t.edges
                  if e.label.kind == "option"}
        assert "o_a" not in labels
        assert {"o_b", "o_bp"} <= labels

    def test_duplicate_tree_ids_get_suffixed(self, db):
        method = MethodParams(name="m", generation=(
            GenerationParams(root_label="b", tree_id="t", max_depth=1),
            GenerationParams(root_label="a", tree_id="t", max_depth=1),
        ))
        bundle = regenerate_bundle(db, method)
        assert [t.id for t in bundle.trees] == ["t", "t.1"]

    def test_unknown_root_warns_and_skips(self, db):
        method = MethodParams(name="bad", generation=(
            GenerationParams(root_label="nope", tree_id="x"),))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            bundle = regenerate_bundle(db, method)
        assert bundle.trees == ()
        assert len(caught) == 2  # skipped root, then empty bundle

    def test_method_grid_lookup(self):
        grid = MethodGrid(entries=(METHOD,))
        assert grid.entry("m0") is METHOD
        with pytest.raises(ReferenceError_):
            grid.entry("missing")
        with pytest.raises(UsageError):
            MethodGrid(entries=(METHOD, METHOD))


class TestOrderSensitivity:
    def test_update_before_regeneration_changes_bundle(self, db):
        cs = ChangeSet(records=(_attr_record(),))
        rep = noncommutativity_check(db, cs, METHOD, SPEC)
        assert rep.distance is not None and rep.distance > 0.0
        assert "o_a" in rep.options_only_updated_first
        assert rep.options_only_regenerated_first == ()
        assert set(rep.options_shared) == {"o_b", "o_bp"}

    def test_no_changeset_commutes(self, db):
        rep = noncommutativity_check(db, None, METHOD, SPEC)
        assert rep.distance == 0.0
        assert rep.options_only_updated_first == ()
        rep2 = noncommutativity_check(db, ChangeSet(records=()),
                                      METHOD, SPEC)
        assert rep2.distance == 0.0

    def test_empty_bundles_note(self, db):
        method = MethodParams(name="bad", generation=(
            GenerationParams(root_label="nope", tree_id="x"),))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = noncommutativity_check(db, None, method, SPEC)
        assert rep.distance == 0.0
        assert "both bundles empty" in rep.notes


class TestHistoryTrace:
    def _chain(self, db):
        s1, _ = apply_update(db, ChangeSet(records=(_attr_record(),)))
        s2, _ = apply_update(s1, ChangeSet(records=(TypedRecord(
            RecordKind.EVENT, "e2", "impact", 2.0, provenance=PROV),)))
        return s1, s2

    def test_intact_chain(self, db):
        s1, s2 = self._chain(db)
        trace = history_trace([db, s1, s2])
        assert [stage for stage, _ in trace.chain] == [0, 1, 2]
        assert trace.chain[0][1] == content_digest(db)
        assert trace.retrodiction == ()
        assert trace.all_admissible

    def test_retrodiction_checks_offered_labels(self, db):
        s1, _ = self._chain(db)
        good = history_trace([db, s1], realized=["o_b"], method=METHOD)
        assert good.retrodiction[0].admissible
        assert good.all_admissible
        bad = history_trace([db, s1], realized=["o_a"], method=METHOD)
        assert not bad.retrodiction[0].admissible  # gated out at stage 0
        assert not bad.all_admissible

    def test_skipped_predecessor_breaks_chain(self, db):
        _, s2 = self._chain(db)
        with pytest.raises(ChainError):
            history_trace([db, s2])

    def test_digest_mismatch_breaks_chain(self, db):
        s1, _ = self._chain(db)
        forged = s1.evolve(history_ref="0" * 16)
        with pytest.raises(ChainError):
            history_trace([db, forged])

    def test_stage_must_increase(self, db):
        with pytest.raises(ChainError):
            history_trace([db, db.evolve(history_ref=content_digest(db))])

    def test_usage_errors(self, db):
        s1, _ = self._chain(db)
        with pytest.raises(UsageError):
            history_trace([])
        with pytest.raises(UsageError):
            history_trace([db, s1], realized=["o_b"])  # no method
        with pytest.raises(UsageError):
            history_trace([db, s1], realized=["o_b", "o_b"],
                          method=METHOD)

    def test_trace_config_holds_tuples(self):
        cfg = TraceConfig(realized=("o_b",), method=METHOD)
        assert cfg.realized == ("o_b",)
        assert cfg.method is METHOD
