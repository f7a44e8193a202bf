"""Randomized invariants over the pure computational kernels."""

import math

from hypothesis import given, settings
from hypothesis import strategies as st

from scenariokit.aggregation import _quantize
from scenariokit.dynamics import (
    adaptive_likelihood_update,
    calibrate_parameter,
)
from scenariokit.model import (
    AttributeKind,
    AttributeType,
    ParameterScales,
    ProvenanceRecord,
    QuantizerSpec,
    TimeSpec,
    TypedRecord,
    RecordKind,
)
from scenariokit.ingest import parse_record, serialize_record
from scenariokit.sbafile import decode, to_jsonable
from scenariokit.solve import discounted_total, quantal_response
from scenariokit.space import EncodingComponent, ExtractorSpec, \
    _component_discrepancy

from oracles import profile_db
from scenariokit.aggregation import aggregate_attribute

unit = st.floats(min_value=0.0, max_value=1.0)
finite = st.floats(allow_nan=False, allow_infinity=False,
                   min_value=-1e6, max_value=1e6)


class TestScalarUpdates:
    @given(unit, unit, unit)
    def test_adaptive_update_stays_between_endpoints(self, ell, observed,
                                                     beta):
        out = adaptive_likelihood_update(ell, observed, beta)
        lo, hi = min(ell, observed), max(ell, observed)
        assert lo - 1e-12 <= out <= hi + 1e-12

    @given(finite, finite, unit)
    def test_calibration_stays_between_endpoints(self, theta, theta_hat,
                                                 eta):
        out = calibrate_parameter(theta, theta_hat, eta)
        lo, hi = min(theta, theta_hat), max(theta, theta_hat)
        assert lo - 1e-9 <= out <= hi + 1e-9


class TestDecisionRules:
    @given(st.dictionaries(st.sampled_from("abcdef"),
                           st.floats(min_value=-50, max_value=50),
                           min_size=1, max_size=6),
           st.floats(min_value=0.0, max_value=5.0))
    def test_quantal_response_is_a_distribution(self, utilities, lam):
        probs = quantal_response(utilities, lam)
        assert set(probs) == set(utilities)
        assert all(p >= 0.0 for p in probs.values())
        assert math.isclose(sum(probs.values()), 1.0, abs_tol=1e-9)

    @given(st.dictionaries(st.sampled_from("abcdef"),
                           st.floats(min_value=-50, max_value=50),
                           min_size=2, max_size=6),
           st.floats(min_value=0.0, max_value=5.0))
    def test_quantal_response_orders_like_utility(self, utilities, lam):
        probs = quantal_response(utilities, lam)
        for a in utilities:
            for b in utilities:
                if utilities[a] > utilities[b]:
                    assert probs[a] >= probs[b] - 1e-12

    @given(st.lists(st.floats(min_value=-100, max_value=100),
                    min_size=1, max_size=8))
    def test_undiscounted_total_is_plain_sum(self, utilities):
        assert math.isclose(discounted_total(utilities, 1.0),
                            sum(utilities), abs_tol=1e-9)

    @given(st.lists(st.floats(min_value=-100, max_value=100),
                    min_size=1, max_size=8),
           st.floats(min_value=0.01, max_value=1.0))
    def test_discounted_total_bounded_by_plain_sum(self, utilities,
                                                   delta):
        total = discounted_total(utilities, delta)
        assert abs(total) <= sum(abs(u) for u in utilities) + 1e-9


class TestDiscrepancies:
    multisets = st.lists(
        st.tuples(st.sampled_from("xyzuv"),
                  st.integers(min_value=1, max_value=5)),
        max_size=5, unique_by=lambda kv: kv[0]).map(tuple)

    @staticmethod
    def _jaccard(a, b):
        comp = EncodingComponent(
            name="c", extractor=ExtractorSpec(
                kind="event_pattern_multiset"),
            discrepancy="multiset_jaccard")
        return _component_discrepancy(comp, a, b)

    @given(multisets, multisets)
    def test_jaccard_bounds_and_symmetry(self, a, b):
        d = self._jaccard(a, b)
        assert 0.0 <= d <= 1.0
        assert d == self._jaccard(b, a)

    @given(multisets)
    def test_jaccard_identity(self, a):
        assert self._jaccard(a, a) == 0.0

    @given(multisets, multisets)
    def test_jaccard_disjoint_supports_are_maximal(self, a, b):
        disjoint_b = tuple((k + "_", n) for k, n in b)
        if a and disjoint_b:
            assert self._jaccard(a, disjoint_b) == 1.0

    vectors = st.lists(st.integers(min_value=-4, max_value=9),
                       min_size=1, max_size=6)

    @staticmethod
    def _l1(a, b):
        comp = EncodingComponent(
            name="c", extractor=ExtractorSpec(
                kind="terminal_outcome_vector",
                entities=("x",), value_range=(-4.0, 9.0)),
            discrepancy="normalized_l1")
        return _component_discrepancy(comp, tuple(map(float, a)),
                                      tuple(map(float, b)))

    @given(st.data())
    def test_l1_bounds_symmetry_triangle(self, data):
        n = data.draw(st.integers(min_value=1, max_value=5))
        coord = st.integers(min_value=-4, max_value=9)
        a = data.draw(st.lists(coord, min_size=n, max_size=n))
        b = data.draw(st.lists(coord, min_size=n, max_size=n))
        c = data.draw(st.lists(coord, min_size=n, max_size=n))
        d_ab, d_ba = self._l1(a, b), self._l1(b, a)
        assert 0.0 <= d_ab <= 1.0
        assert d_ab == d_ba
        assert self._l1(a, a) == 0.0
        assert self._l1(a, c) <= d_ab + self._l1(b, c) + 1e-12


class TestAggregationMonotonicity:
    @given(st.lists(st.integers(min_value=0, max_value=5),
                    min_size=2, max_size=5),
           st.data())
    @settings(max_examples=60, deadline=None)
    def test_raising_a_member_never_lowers_the_aggregate(self, values,
                                                         data):
        idx = data.draw(st.integers(min_value=0,
                                    max_value=len(values) - 1))
        bump = data.draw(st.integers(min_value=1,
                                     max_value=5 - values[idx])) \
            if values[idx] < 5 else 0
        raised = list(values)
        raised[idx] = values[idx] + bump
        base_db = profile_db(tuple(values))
        high_db = profile_db(tuple(raised))
        for rule in ("sum", "mean", "max", "min"):
            attr = f"strength_{rule}"
            assert aggregate_attribute(high_db, "X", attr) >= \
                aggregate_attribute(base_db, "X", attr)


class TestQuantizer:
    @given(st.floats(min_value=-3.0, max_value=9.0,
                     allow_nan=False))
    def test_nearest_level_with_clamp(self, score):
        t = AttributeType(id="t", kind=AttributeKind.ORDINAL,
                          levels=(0, 1, 2, 3, 4, 5))
        out = _quantize(score, t)
        assert out in t.levels
        best = min(abs(lv - score) for lv in t.levels)
        assert abs(out - score) <= best + 1e-12

    @given(st.integers(min_value=0, max_value=4))
    def test_ties_round_toward_the_higher_level(self, k):
        t = AttributeType(id="t", kind=AttributeKind.ORDINAL,
                          levels=(0, 1, 2, 3, 4, 5))
        assert _quantize(k + 0.5, t) == k + 1


class TestCanonicalForm:
    scalars = st.one_of(
        st.integers(min_value=-10**6, max_value=10**6),
        st.floats(allow_nan=False, allow_infinity=False, width=32),
        st.text(st.characters(codec="utf-8",
                              categories=("L", "N", "P", "Zs")),
                max_size=20),
        st.booleans())
    names = st.text(st.sampled_from("abcdefgh_"), min_size=1, max_size=10)

    @given(st.sampled_from(list(RecordKind)), names, names, scalars,
           unit, names)
    def test_record_round_trip_is_identity(self, kind, subject, predicate,
                                           obj, confidence, source):
        rec = TypedRecord(
            kind, subject, predicate, obj, confidence=round(confidence, 6),
            time=TimeSpec(start="2026-01-01"),
            provenance=ProvenanceRecord(source=source,
                                        timestamp="2026-01-01"))
        again = decode(TypedRecord, to_jsonable(rec))
        assert again == rec
        assert parse_record(serialize_record(rec)) == rec
        assert serialize_record(rec) == serialize_record(again)


class TestScales:
    @given(st.sampled_from(ParameterScales().likelihood_levels))
    def test_step_code_indexes_the_scale(self, level):
        scales = ParameterScales()
        assert scales.likelihood_levels[
            scales.step_code("likelihood", level)] == level
