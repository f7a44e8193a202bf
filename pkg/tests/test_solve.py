"""Solvers: induction, most likely paths, choice rules, bundle selection."""

import pytest

from scenariokit.errors import MissingDataError, UsageError
from scenariokit.solve import (
    DecisionRule,
    Policy,
    backward_induct,
    discounted_total,
    induced_path,
    mlp,
    mrp_under_uncertainty,
    quantal_response,
    root_continuation_likelihood,
    score_root,
    select_bundle,
    RootScoreWeights,
)

from fixture_builders import (
    build_bi_tree,
    build_border_db,
    build_mlp_tree,
    build_noncomm_db,
)


class TestBackwardInduction:
    def test_four_actor_worked_example(self):
        result = backward_induct(build_bi_tree())
        assert result.outcome_leaf == "z2"
        labels = [build_bi_tree().edge_by_id[e].label.display()
                  for e in (result.policy.decisions[p]
                            for p in ("n0", "n1", "n2", "n3"))]
        assert labels == ["O1", "O2", "¬O3", "O4"]
        assert result.path == ("e0", "e2", "e5")

    def test_missing_rank_is_an_error(self):
        tree = build_bi_tree()
        partial = {(r.entity, r.leaf): r.rank
                   for r in tree.ranks if r.leaf != "z4"}
        with pytest.raises(MissingDataError):
            backward_induct(tree, ranks=partial)

    def test_induced_path_follows_policy(self):
        tree = build_bi_tree()
        result = backward_induct(tree)
        edges = induced_path(tree, result.policy)
        assert tuple(e.id for e in edges) == result.path

    def test_policy_rejects_edges_not_outgoing(self):
        tree = build_bi_tree()
        policy = Policy(decision_choice=(("n0", "e4"),))
        with pytest.raises(UsageError):
            induced_path(tree, policy)


class TestMostLikelyPath:
    def test_worked_figure(self):
        tree = build_mlp_tree()
        result = mlp(tree)
        assert result.path == ("e0", "e2")
        assert [tree.edge_by_id[e].label.display()
                for e in result.path] == ["o1", "o2"]
        assert result.value == 0.7 * 0.8
        assert result.j["m0"] == result.value

    def test_terminal_continuations_are_one(self):
        tree = build_mlp_tree()
        result = mlp(tree)
        for leaf in tree.leaves:
            assert result.j[leaf] == 1.0

    def test_path_value_matches_root_continuation(self):
        tree = build_mlp_tree()
        assert root_continuation_likelihood(tree) == mlp(tree).value

    def test_set_valued_tiebreak_returns_all(self):
        tree = build_mlp_tree()
        result = mlp(tree, tiebreak="set_valued")
        assert result.paths == (("e0", "e2"),)

    def test_secondary_tiebreak_needs_scorer(self):
        with pytest.raises(UsageError):
            mlp(build_mlp_tree(), tiebreak="secondary")
        with pytest.raises(UsageError):
            mlp(build_mlp_tree(), tiebreak="nope")


class TestDecisionRules:
    U = {("A", "z", "w1"): 10.0, ("A", "z", "w2"): 0.0}

    def test_seu_prior_weighted(self):
        rule = DecisionRule(kind="seu", prior=(("w1", 0.25), ("w2", 0.75)))
        assert rule.leaf_value(self.U, "A", "z", ("w1", "w2")) == 2.5

    def test_prior_must_sum_to_one(self):
        from scenariokit.errors import NormalizationError
        rule = DecisionRule(kind="seu", prior=(("w1", 0.5), ("w2", 0.1)))
        with pytest.raises(NormalizationError):
            rule.leaf_value(self.U, "A", "z", ("w1", "w2"))

    def test_maximin_takes_worst_case(self):
        rule = DecisionRule(kind="maximin")
        assert rule.leaf_value(self.U, "A", "z", ("w1", "w2")) == 0.0

    def test_maxmin_eu_minimizes_over_prior_set(self):
        rule = DecisionRule(
            kind="maxmin_eu",
            prior_set=((("w1", 0.9), ("w2", 0.1)),
                       (("w1", 0.1), ("w2", 0.9))))
        assert rule.leaf_value(self.U, "A", "z", ("w1", "w2")) == 1.0

    def test_maxmin_eu_needs_priors(self):
        rule = DecisionRule(kind="maxmin_eu")
        with pytest.raises(UsageError):
            rule.leaf_value(self.U, "A", "z", ("w1", "w2"))

    def test_strict_preference_goes_through_ranks(self):
        with pytest.raises(UsageError):
            mrp_under_uncertainty(
                build_mlp_tree(), {},
                DecisionRule(kind="strict_preference"), ("w1",))

    def test_mrp_under_uncertainty_picks_by_rule(self):
        tree = build_mlp_tree()
        worlds = ("w1", "w2")
        utilities = {}
        for leaf in tree.leaves:
            for entity in ("A1", "A2", "e1"):
                utilities[(entity, leaf, "w1")] = \
                    {"z1": 0.0, "z2": 5.0, "z3": 1.0, "z4": 1.0}[leaf]
                utilities[(entity, leaf, "w2")] = 1.0
        rule = DecisionRule(kind="seu", prior=(("w1", 0.5), ("w2", 0.5)))
        result = mrp_under_uncertainty(tree, utilities, rule, worlds)
        assert result.outcome_leaf == "z2"


class TestStochasticChoice:
    def test_zero_rationality_is_uniform(self):
        probs = quantal_response({"a": 3.0, "b": -1.0}, lam=0.0)
        assert probs == {"a": 0.5, "b": 0.5}

    def test_high_rationality_concentrates(self):
        probs = quantal_response({"a": 3.0, "b": -1.0}, lam=50.0)
        assert probs["a"] > 0.999999
        assert abs(sum(probs.values()) - 1.0) < 1e-12

    def test_negative_rationality_rejected(self):
        with pytest.raises(UsageError):
            quantal_response({"a": 1.0}, lam=-0.5)

    def test_discounting(self):
        assert discounted_total([1.0, 1.0, 1.0], 0.5) == 1.75
        with pytest.raises(UsageError):
            discounted_total([1.0], 0.0)


class TestBundleSelection:
    def test_all_keeps_everything(self):
        trees = (build_mlp_tree(),)
        bundle = select_bundle(trees, "all")
        assert bundle.trees == trees

    def test_top_k_orders_by_root_continuation(self):
        from dataclasses import replace
        base = build_mlp_tree()
        other = replace(base, id="other")
        bundle = select_bundle([base, other], "top_k_by_root_J", k=1)
        assert len(bundle.trees) == 1

    def test_mixed_stages_rejected(self):
        from fixture_builders import build_bi_tree
        a = build_mlp_tree()
        b = build_bi_tree()
        assert a.stage == b.stage  # builders share a stage; fake a clash
        from dataclasses import replace
        with pytest.raises(UsageError):
            select_bundle([a, replace(b, stage=b.stage + 1)], "all")

    def test_k_required_for_top_k(self):
        with pytest.raises(UsageError):
            select_bundle([build_mlp_tree()], "top_k_by_root_J")

    def test_score_root_ranks_events_by_weighted_features(self):
        db = build_noncomm_db()
        rows = dict(score_root(
            db, RootScoreWeights(likelihood=1.0, impact_magnitude=1.0)))
        assert rows["e1"] == pytest.approx(0.7 + 1.0)
        assert rows["e2"] == pytest.approx(0.2 + 0.5)

    def test_score_root_degree_counts_ties(self):
        db = build_border_db()
        rows = dict(score_root(db, RootScoreWeights(degree=1.0)))
        assert rows["a"] == 2.0  # a-m and a-b ties
        assert rows["m"] == 1.0
