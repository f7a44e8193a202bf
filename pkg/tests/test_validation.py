"""Structural checks and attitude-consistency findings."""

import pytest

from scenariokit.model import (
    Actor,
    ActorCategory,
    AssessmentState,
    AttitudeOperator,
    AttitudeRecord,
    AttributeAssignment,
    AttributeKind,
    AttributeType,
    Coalition,
    Domain,
    DyadicTie,
    ParameterTuple,
    Horizon,
    Proposition,
    RelationFamily,
    RelationType,
)
from scenariokit.validation import (
    AxiomConfig,
    validate_assessment_state,
)

from fixture_builders import PROV, build_border_db

B = AttitudeOperator.BELIEVE
K = AttitudeOperator.KNOW
W = AttitudeOperator.WANT
I = AttitudeOperator.INTEND
F = AttitudeOperator.FEAR
Com = AttitudeOperator.COMMIT


def _actor(aid):
    return Actor(id=aid, category=ActorCategory.COLLECTIVE,
                 domain_label=Domain.POLITICAL)


def _db(**kwargs):
    base = dict(stage=0, actors=[_actor("a"), _actor("b")])
    base.update(kwargs)
    return AssessmentState.create(**base)


def _att(holder, op, content, **kw):
    return AttitudeRecord(holder=holder, operator=op, content=content,
                          provenance=PROV, **kw)


def codes(report):
    return sorted({f.code for f in report.findings})


def hits(report, code):
    return [f for f in report.findings if f.code == code]


class TestCleanStates:
    def test_border_fixture_is_clean(self):
        report = validate_assessment_state(build_border_db())
        assert report.findings == ()
        assert report.ok
        assert report.counts == {"error": 0, "warning": 0, "note": 0}

    def test_empty_state_is_clean(self):
        assert validate_assessment_state(_db()).findings == ()


class TestStructural:
    def test_duplicate_ids(self):
        db = _db(propositions=[Proposition(id="p"), Proposition(id="p")])
        report = validate_assessment_state(db)
        assert [f.code for f in hits(report, "S-DUP")] == ["S-DUP"]
        assert not report.ok

    def test_unresolved_references(self):
        db = _db(coalitions=[Coalition(id="X", members=("a", "ghost"))])
        assert "S-REF" in codes(validate_assessment_state(db))

    def test_one_sided_negation_links(self):
        db = _db(propositions=[
            Proposition(id="p", negation_of="q"),
            Proposition(id="q", negation_of="r"),
            Proposition(id="r"),
        ])
        assert "S-NEG" in codes(validate_assessment_state(db))

    def test_value_outside_levels(self):
        db = _db(
            attribute_types=[AttributeType(
                id="t", kind=AttributeKind.ORDINAL, levels=(0, 1, 2))],
            assignments=[AttributeAssignment(
                subject="a", attribute="t", value=9, provenance=PROV)])
        assert "S-VALUE" in codes(validate_assessment_state(db))

    def test_stage_beyond_state(self):
        db = _db(
            attribute_types=[AttributeType(
                id="t", kind=AttributeKind.ORDINAL, levels=(0, 1))],
            assignments=[AttributeAssignment(
                subject="a", attribute="t", value=1, stage=0,
                provenance=PROV)])
        shifted = db.evolve(stage=0)  # same stage: fine
        assert validate_assessment_state(shifted).ok
        # an assignment claiming a future stage is structural corruption
        future = _db(stage=0,
                     attribute_types=[AttributeType(
                         id="t", kind=AttributeKind.ORDINAL,
                         levels=(0, 1))])
        future = future.evolve(assignments=(AttributeAssignment(
            subject="a", attribute="t", value=1, stage=3,
            provenance=PROV),))
        assert "S-STAGE" in codes(validate_assessment_state(future))

    def test_commitment_needs_coalition_holder(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", Com, "p")])
        assert "S-HOLDER" in codes(validate_assessment_state(db))

    def test_individual_operator_on_coalition(self):
        db = _db(coalitions=[Coalition(id="X", members=("a", "b"))],
                 propositions=[Proposition(id="p")],
                 attitudes=[_att("X", B, "p")])
        assert "S-HOLDER" in codes(validate_assessment_state(db))

    def test_attitude_parameter_scale(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", B, "p",
                                 params=ParameterTuple(
                                     likelihood_level="gigantic",
                                     intensity=2,
                                     horizon=Horizon.SHORT))])
        assert "S-SCALE" in codes(validate_assessment_state(db))

    def test_sign_on_unsigned_relation(self):
        db = _db(
            relation_types=[RelationType(
                id="talks", family=RelationFamily.INFORMATION_COMMUNICATION,
                signed=False)],
            ties=[DyadicTie(relation="talks", source="a", target="b",
                            sign=1, provenance=PROV)])
        assert "S-SIGN" in codes(validate_assessment_state(db))


class TestAxioms:
    def _know_without_belief(self):
        return _db(propositions=[Proposition(id="p")],
                   attitudes=[_att("a", K, "p")])

    def test_a1_knowledge_needs_belief(self):
        report = validate_assessment_state(self._know_without_belief())
        found = hits(report, "A1")
        assert len(found) == 1
        assert found[0].severity == "error"
        assert not report.ok

    def test_a1_satisfied_when_belief_present(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", K, "p"), _att("a", B, "p")])
        assert "A1" not in codes(validate_assessment_state(db))

    def test_a6_knowledge_against_contrary_belief(self):
        db = _db(propositions=[Proposition(id="p"),
                               Proposition(id="np", negation_of="p")],
                 attitudes=[_att("a", K, "p"), _att("a", B, "p"),
                            _att("a", B, "np")])
        assert "A6" in codes(validate_assessment_state(db))

    def test_a2_belief_closure_is_single_hop(self):
        db = _db(propositions=[
            Proposition(id="p", implies=("q",)),
            Proposition(id="q", implies=("r",)),
            Proposition(id="r"),
        ], attitudes=[_att("a", B, "p")])
        report = validate_assessment_state(db)
        found = hits(report, "A2")
        assert len(found) == 1
        assert found[0].subjects[:3] == ("a", "p", "q")  # not (p, r)

    def test_a3_intention_needs_desire_and_feasibility_belief(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", I, "p")])
        report = validate_assessment_state(db)
        found = hits(report, "A3")
        severities = sorted(f.severity for f in found)
        # missing desire -> warning; no feasibility proposition -> note
        assert severities == ["note", "warning"]

    def test_a3_feasibility_belief_checked_when_declared(self):
        db = _db(propositions=[
            Proposition(id="p"),
            Proposition(id="can_p", possibility_of="p"),
        ], attitudes=[_att("a", I, "p"), _att("a", W, "p")])
        report = validate_assessment_state(db)
        found = [f for f in hits(report, "A3")
                 if f.severity == "warning"]
        assert len(found) == 1  # intends without believing it possible
        ok_db = _db(propositions=[
            Proposition(id="p"),
            Proposition(id="can_p", possibility_of="p"),
        ], attitudes=[_att("a", I, "p"), _att("a", W, "p"),
                      _att("a", B, "can_p")])
        assert "A3" not in codes(validate_assessment_state(ok_db))

    def test_a5_fear_wants_the_negation(self):
        db = _db(propositions=[Proposition(id="p"),
                               Proposition(id="np", negation_of="p")],
                 attitudes=[_att("a", F, "p")])
        assert "A5" in codes(validate_assessment_state(db))

    def test_a7_conflicting_intentions_reported_once(self):
        db = _db(propositions=[Proposition(id="p"),
                               Proposition(id="np", negation_of="p")],
                 attitudes=[_att("a", I, "p"), _att("a", I, "np"),
                            _att("a", W, "p"), _att("a", W, "np")])
        report = validate_assessment_state(db)
        found = hits(report, "A7")
        assert len(found) == 1
        assert found[0].severity == "error"

    def test_a8_knowledge_closure(self):
        db = _db(propositions=[Proposition(id="p", implies=("q",)),
                               Proposition(id="q")],
                 attitudes=[_att("a", K, "p"), _att("a", B, "p"),
                            _att("a", B, "q")])
        assert "A8" in codes(validate_assessment_state(db))

    def _committed(self, members_support=True):
        attitudes = [_att("X", Com, "p")]
        if members_support:
            attitudes += [_att("a", B, "p"), _att("b", I, "p"),
                          _att("b", W, "p")]
        return _db(coalitions=[Coalition(id="X", members=("a", "b"))],
                   propositions=[Proposition(id="p")],
                   attitudes=attitudes)

    def test_c1_commitment_needs_member_support(self):
        report = validate_assessment_state(self._committed(False))
        assert "C1" in codes(report)
        assert "C1" not in codes(
            validate_assessment_state(self._committed(True)))

    def test_c2_opposed_commitments(self):
        db = _db(coalitions=[Coalition(id="X", members=("a", "b"))],
                 propositions=[Proposition(id="p"),
                               Proposition(id="np", negation_of="p")],
                 attitudes=[_att("X", Com, "p"), _att("X", Com, "np")])
        report = validate_assessment_state(db)
        assert len(hits(report, "C2")) == 1

    def test_c4_commitment_closure(self):
        db = _db(coalitions=[Coalition(id="X", members=("a", "b"))],
                 propositions=[Proposition(id="p", implies=("q",)),
                               Proposition(id="q")],
                 attitudes=[_att("X", Com, "p"), _att("a", B, "p"),
                            _att("b", B, "p"), _att("a", B, "q"),
                            _att("b", B, "q")])
        assert "C4" in codes(validate_assessment_state(db))

    def test_c5_cross_coalition_conflict_via_shared_member(self):
        db = _db(
            actors=[_actor("a"), _actor("b"), _actor("c")],
            coalitions=[Coalition(id="X", members=("a", "b")),
                        Coalition(id="Y", members=("b", "c"))],
            propositions=[Proposition(id="p"),
                          Proposition(id="np", negation_of="p")],
            attitudes=[_att("X", Com, "p"), _att("Y", Com, "np"),
                       _att("a", B, "p"), _att("b", B, "p"),
                       _att("b", B, "np"), _att("c", B, "np")])
        report = validate_assessment_state(db)
        found = hits(report, "C5")
        assert len(found) == 1
        assert found[0].subjects[0] == "b"

    def test_disputed_attitudes_are_ignored(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", K, "p", disputed=True)])
        assert "A1" not in codes(validate_assessment_state(db))


class TestConfiguration:
    def test_severity_override(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", K, "p")])
        config = AxiomConfig(severities=(("A1", "note"),))
        report = validate_assessment_state(db, config)
        assert hits(report, "A1")[0].severity == "note"
        assert report.ok

    def test_skip_suppresses_code(self):
        db = _db(propositions=[Proposition(id="p")],
                 attitudes=[_att("a", K, "p")])
        report = validate_assessment_state(db, AxiomConfig(skip=("A1",)))
        assert "A1" not in codes(report)

    def test_unknown_severity_rejected(self):
        config = AxiomConfig(severities=(("A1", "catastrophic"),))
        with pytest.raises(ValueError):
            config.severity_of("A1")

    def test_findings_sorted_structural_then_severity(self):
        db = _db(
            propositions=[Proposition(id="p"), Proposition(id="p")],
            attitudes=[_att("a", K, "p")])
        report = validate_assessment_state(db)
        assert [f.code for f in report.findings] == ["S-DUP", "A1"]
