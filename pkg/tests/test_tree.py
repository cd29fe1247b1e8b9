"""Tree growing, pruning, serialization, and positivity marking."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import bicausetree as bt
from bicausetree import (
    CounterRng,
    FitConfig,
    SingleArmError,
    Table2x2,
    crump_cutoffs,
    split_p_value,
    symmetric_prevalence_cutoffs,
)
from bicausetree.tree import select_feature, select_split_value

from conftest import make_dataset
from oracles import crump_oracle


def dataset_from_cells(cells, names=("x0", "x1")):
    """Expand (x0, x1, t, count) cells into a dataset with y equal to t."""
    rows = []
    for x0v, x1v, tv, count in cells:
        rows.extend([(float(x0v), float(x1v), tv)] * count)
    arr = np.array(rows, dtype=np.float64)
    t = arr[:, 2].astype(np.int64)
    return make_dataset(arr[:, :2], t, y=t.astype(np.float64), names=names)


def chi2_table_p(a, b, c, d):
    """Chi-square p for a 2x2 table laid out as (control a,b / treated c,d)."""
    n = a + b + c + d
    diff = a * d - b * c
    stat = n * diff * diff / ((a + b) * (c + d) * (a + c) * (b + d))
    return math.erfc(math.sqrt(stat / 2.0))


# A root split that is imbalanced but not significant (p ~= 0.108), with
# strong, direction-cancelling imbalance one level down.  Grown: root on x0,
# both children on x1.  Holm rejects only the children, so the root survives
# through them.
KEEP_VIA_CHILD_CELLS = [
    (0, 1, 1, 90),
    (0, 0, 1, 10),
    (0, 1, 0, 10),
    (0, 0, 0, 106),
    (1, 1, 1, 10),
    (1, 0, 1, 90),
    (1, 1, 0, 78),
    (1, 0, 0, 6),
]

# Same marginal x0 table as above but x1 is constant, so the only grown split
# is the root itself and Holm prunes the whole tree to a single leaf.
PRUNE_TO_LEAF_CELLS = [
    (1, 0, 1, 100),
    (0, 0, 1, 100),
    (1, 0, 0, 84),
    (0, 0, 0, 116),
]

# Stronger x0 imbalance (p ~= 4.4e-5): the root split is rejected directly.
REJECT_ROOT_CELLS = [
    (1, 0, 1, 100),
    (0, 0, 1, 100),
    (1, 0, 0, 60),
    (0, 0, 0, 140),
]


# ---------------------------------------------------------------------------
# feature selection


class TestSelectFeature:
    def test_max_asmd_takes_most_imbalanced(self):
        rng = np.random.default_rng(3)
        t = np.repeat([0, 1], 50)
        X = np.column_stack([rng.normal(0, 1, 100), rng.normal(0, 1, 100) + 2 * t])
        assert select_feature(X, t.astype(bool)) == 1

    def test_max_asmd_tie_prefers_lowest_index(self):
        t = np.repeat([0, 1], 4)
        col = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0])
        X = np.column_stack([col, col])
        assert select_feature(X, t.astype(bool), "max_asmd") == 0

    def test_infinite_asmd_wins(self):
        t = np.repeat([0, 1], 10)
        X = np.column_stack([np.tile([0.0, 5.0], 10), t.astype(float)])
        assert select_feature(X, t.astype(bool)) == 1

    def test_random_requires_rng(self):
        X = np.zeros((6, 2))
        t = np.array([0, 1, 0, 1, 0, 1], dtype=bool)
        with pytest.raises(ValueError, match="rng"):
            select_feature(X, t, "random")

    def test_random_follows_the_stream(self):
        X = np.zeros((6, 3))
        t = np.array([0, 1, 0, 1, 0, 1], dtype=bool)
        for seed in range(8):
            expected = int(CounterRng(seed).uniform(1)[0] * 3)
            assert select_feature(X, t, "random", CounterRng(seed)) == expected

    def test_combined_sq_weighs_imbalance_by_model_coefficient(self):
        t = np.repeat([0, 1], 100)
        alt = np.tile([-1.0, 1.0], 100)
        X = np.column_stack([t + 0.1 * alt, alt + 0.01 * t])
        assert select_feature(X, t.astype(bool), "combined_sq") == 0

    def test_combined_sq_shortcuts_on_infinite_imbalance(self):
        t = np.repeat([0, 1], 5)
        X = np.column_stack([t.astype(float), np.tile([0.0, 1.0], 5)])
        assert select_feature(X, t.astype(bool), "combined_sq") == 0

    def test_unknown_mode(self):
        X = np.zeros((4, 1))
        t = np.array([0, 1, 0, 1], dtype=bool)
        with pytest.raises(ValueError, match="mode"):
            select_feature(X, t, "entropy")

    def test_single_arm_rejected(self):
        X = np.arange(8.0).reshape(4, 2)
        with pytest.raises(ValueError):
            select_feature(X, np.ones(4, dtype=bool))


# ---------------------------------------------------------------------------
# split value search


def best_split_reference(x, t, mtgs, candidates=None):
    """Ascending scan over candidate values using the same per-table test."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t)
    if candidates is None:
        candidates = np.unique(x)[:-1]
    n_control = int((t == 0).sum())
    n_treated = int((t == 1).sum())
    best = None
    for v in candidates:
        left = x <= v
        a = int(((t == 0) & left).sum())
        c = int(((t == 1) & left).sum())
        table = Table2x2(a, n_control - a, c, n_treated - c)
        if min(table.a, table.b, table.c, table.d) < mtgs:
            continue
        p = split_p_value(table)
        if best is None or p < best[1]:
            best = (float(v), p)
    return best


class TestSelectSplitValue:
    def test_fisher_worked_example(self):
        # x 0..7 with treatment on the top half: the midpoint split yields
        # the degenerate 4/0/0/4 table whose exact two-sided p is 2/70.
        x = np.arange(8.0)
        t = np.repeat([0, 1], 4)
        value, p = select_split_value(x, t, min_treat_group_size=0)
        assert value == 3.0
        assert p == pytest.approx(2.0 / 70.0, rel=1e-12)

    def test_min_group_size_can_exclude_every_candidate(self):
        x = np.arange(8.0)
        t = np.repeat([0, 1], 4)
        assert select_split_value(x, t, min_treat_group_size=2) is None

    def test_no_candidate_returns_none(self):
        x = np.array([0.0, 0.0, 1.0, 1.0, 1.0])
        t = np.array([1, 0, 0, 1, 1])
        assert select_split_value(x, t, min_treat_group_size=2) is None

    def test_constant_feature_raises(self):
        with pytest.raises(ValueError, match="constant"):
            select_split_value(np.ones(10), np.tile([0, 1], 5))

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            select_split_value(np.array([]), np.array([]))

    def test_exact_tie_takes_smallest_value(self):
        # Mirrored imbalance: v=0 and v=1 give the same exact p of 7/15.
        x = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
        t = np.array([1, 1, 0, 0, 1, 1])
        value, p = select_split_value(x, t, min_treat_group_size=0)
        assert value == 0.0
        assert p == pytest.approx(7.0 / 15.0, rel=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("grid", [2, 3, 5, 0])
    def test_matches_reference_scan(self, seed, grid):
        gen = np.random.default_rng(1000 * grid + seed)
        n = int(gen.integers(20, 400))
        if grid:
            x = gen.integers(0, grid, n).astype(np.float64) * 0.5
        else:
            x = gen.normal(0.0, 1.0, n)
        t = (gen.random(n) < 0.4).astype(np.int64)
        assume_ok = 0 < t.sum() < n and np.unique(x).size > 1
        if not assume_ok:
            pytest.skip("degenerate draw")
        for mtgs in (0, 2, 5):
            expected = best_split_reference(x, t, mtgs)
            got = select_split_value(x, t, min_treat_group_size=mtgs)
            if expected is None:
                assert got is None
            else:
                assert got == expected

    def test_quantile_thinning_matches_reference_on_thinned_set(self):
        gen = np.random.default_rng(7)
        x = gen.normal(0.0, 1.0, 300)
        t = (gen.random(300) < 1.0 / (1.0 + np.exp(-1.5 * x))).astype(np.int64)
        m = 8
        xs = np.sort(x)
        qvals = np.unique(np.quantile(xs, np.linspace(0.0, 1.0, m), method="lower"))
        qvals = qvals[qvals < xs[-1]]
        assert qvals.size <= m
        expected = best_split_reference(x, t, 2, candidates=qvals)
        got = select_split_value(x, t, min_treat_group_size=2, max_split_candidates=m)
        assert got == expected
        assert got[0] in set(qvals.tolist())

    def test_candidate_cap_beyond_distinct_count_changes_nothing(self):
        gen = np.random.default_rng(11)
        x = gen.integers(0, 40, 250).astype(np.float64)
        t = (gen.random(250) < 0.5).astype(np.int64)
        full = select_split_value(x, t)
        capped = select_split_value(x, t, max_split_candidates=500)
        assert full == capped

    def test_underflow_falls_back_to_smallest_zero_candidate(self):
        # Near-perfect separation on 2000 rows: the best statistic is ~1984
        # and its survival probability underflows to exactly zero, as do the
        # neighbouring candidates'.  The smallest such value must win.
        n = 2000
        x = np.arange(n, dtype=np.float64)
        t = (x >= 1000).astype(np.int64)
        t[[0, 1]] = 1
        t[[n - 2, n - 1]] = 0
        value, p = select_split_value(x, t, min_treat_group_size=2)
        assert p == 0.0
        expected = best_split_reference(x, t, 2)
        assert (value, p) == expected


# ---------------------------------------------------------------------------
# stopping rules


class TestStoppingRules:
    def test_balanced_data_is_a_single_leaf(self):
        X = np.tile([0.0, 1.0], 10)
        t = np.tile([0, 1, 1, 0], 5)
        tree = bt.fit(make_dataset(X, t))
        assert len(tree.nodes) == 1
        assert tree.nodes[0].split is None
        assert tree.n_leaves == 1

    def test_asmd_threshold_boundary(self):
        ds = dataset_from_cells(REJECT_ROOT_CELLS)
        imbalance = 0.2 / math.sqrt(0.25 * 200 / 199 + 0.21 * 200 / 199)
        below = bt.fit(ds, FitConfig(asmd_threshold=imbalance * 0.9999))
        above = bt.fit(ds, FitConfig(asmd_threshold=imbalance * 1.0001))
        assert len(below.nodes) == 3
        assert len(above.nodes) == 1
        assert below.nodes[0].split.asmd == pytest.approx(imbalance, rel=1e-12)

    def test_max_depth_limits_every_path(self):
        ds = bt.generate(bt.GeneratorSpec(kind="natural-experiment", n=4000, seed=5))
        shallow = bt.fit(ds, FitConfig(max_depth=1))
        deep = bt.fit(ds, FitConfig(max_depth=3))
        assert max(node.depth for node in shallow.nodes) <= 1
        assert len(shallow.nodes) <= 3
        assert max(node.depth for node in deep.nodes) <= 3
        assert len(deep.nodes) > len(shallow.nodes)

    def test_min_leaf_population_blocks_the_root(self):
        ds = dataset_from_cells(REJECT_ROOT_CELLS)
        tree = bt.fit(ds, FitConfig(min_leaf_population=401))
        assert len(tree.nodes) == 1

    def test_small_arm_blocks_splitting(self):
        x = np.zeros(30)
        x[0] = 1.0
        x[1:6] = 1.0
        t = np.zeros(30, dtype=np.int64)
        t[0] = 1
        tree = bt.fit(make_dataset(x, t))
        assert len(tree.nodes) == 1

    def test_single_arm_children_become_leaves(self):
        # x0 separates the arms perfectly; x1 still varies inside each half
        # but a one-arm node can never justify another split.
        n = 100
        t = np.repeat([0, 1], n // 2)
        x0 = t.astype(np.float64)
        x1 = np.tile([0.0, 1.0, 1.0, 1.0], n // 4)
        ds = make_dataset(np.column_stack([x0, x1]), t)
        tree = bt.fit(ds, FitConfig(min_treat_group_size=0))
        assert len(tree.nodes) == 3
        left, right = (tree.nodes[i] for i in tree.nodes[0].children)
        assert left.is_leaf and right.is_leaf
        assert left.prevalence == 0.0
        assert right.prevalence == 1.0
        assert left.leaf_estimate.mean_treated is None
        assert left.leaf_estimate.effect is None
        assert right.leaf_estimate.mean_control is None
        # degenerate leaf propensities defeat the cutoff search, which then
        # falls back to the full unit interval
        assert tree.cutoffs.low == 0.0 and tree.cutoffs.high == 1.0
        assert tree.violating_leaf_ids() == []

    def test_random_mode_stops_on_a_constant_choice(self):
        cells = [(0, c[0], c[2], c[3]) for c in REJECT_ROOT_CELLS]
        ds = dataset_from_cells(cells)  # x0 constant, x1 imbalanced
        pick_const = next(s for s in range(100) if int(CounterRng(s).uniform(1)[0] * 2) == 0)
        pick_varying = next(s for s in range(100) if int(CounterRng(s).uniform(1)[0] * 2) == 1)
        stopped = bt.fit(ds, FitConfig(feature_selection="random", seed=pick_const))
        split = bt.fit(ds, FitConfig(feature_selection="random", seed=pick_varying))
        assert len(stopped.nodes) == 1
        assert len(split.nodes) == 3
        assert split.nodes[0].split.feature_index == 1

    def test_two_row_dataset(self):
        tree = bt.fit(make_dataset(np.array([0.0, 1.0]), np.array([0, 1])))
        assert len(tree.nodes) == 1


# ---------------------------------------------------------------------------
# pruning


class TestPruning:
    def test_root_kept_through_significant_descendants(self):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        tree = bt.fit(ds)
        assert len(tree.nodes) == 7
        assert tree.n_leaves == 4

        root = tree.nodes[0]
        assert root.split.feature_index == 0
        assert root.split.value == 0.0
        assert root.split.p_raw == pytest.approx(chi2_table_p(116, 84, 100, 100), rel=1e-10)
        assert root.split.p_raw == root.split.p_adjusted
        assert root.split.p_adjusted > tree.config.alpha

        for child_id in root.children:
            child = tree.nodes[child_id]
            assert child.split.feature_index == 1
            assert child.split.p_adjusted <= tree.config.alpha
            assert child.split.p_adjusted >= child.split.p_raw

        left, right = (tree.nodes[i] for i in root.children)
        assert (left.n, left.n_treated) == (216, 100)
        assert (right.n, right.n_treated) == (184, 100)
        assert left.split.p_raw == pytest.approx(chi2_table_p(106, 10, 10, 90), rel=1e-10)
        assert right.split.p_raw == pytest.approx(chi2_table_p(6, 78, 90, 10), rel=1e-10)

        sizes = {leaf: tree.nodes[leaf].n for leaf in tree.leaf_ids()}
        assert sizes == {3: 116, 4: 100, 5: 96, 6: 88}

    def test_keep_through_descendants_survives_stricter_alpha(self):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        tree = bt.fit(ds, FitConfig(alpha=0.01))
        assert len(tree.nodes) == 7
        assert tree.nodes[0].split.p_adjusted > 0.01

    def test_insignificant_root_is_pruned_to_a_leaf(self):
        ds = dataset_from_cells(PRUNE_TO_LEAF_CELLS)
        tree = bt.fit(ds)
        assert len(tree.nodes) == 1
        root = tree.nodes[0]
        assert root.split is None
        assert root.is_leaf
        assert root.n == 400
        assert root.leaf_estimate.prevalence == 0.5

    def test_looser_alpha_rescues_the_same_split(self):
        ds = dataset_from_cells(PRUNE_TO_LEAF_CELLS)
        tree = bt.fit(ds, FitConfig(alpha=0.2))
        assert len(tree.nodes) == 3
        assert tree.nodes[0].split.p_raw == pytest.approx(
            chi2_table_p(116, 84, 100, 100), rel=1e-10
        )

    def test_significant_root_is_rejected_directly(self):
        ds = dataset_from_cells(REJECT_ROOT_CELLS)
        tree = bt.fit(ds)
        assert len(tree.nodes) == 3
        root = tree.nodes[0]
        assert root.split.p_raw == pytest.approx(chi2_table_p(140, 60, 100, 100), rel=1e-10)
        assert root.split.p_adjusted == root.split.p_raw
        assert root.split.p_adjusted <= tree.config.alpha

    def test_leaf_effects_follow_the_outcome(self):
        # y equals t in these datasets, so every two-arm leaf has effect 1
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        tree = bt.fit(ds)
        for leaf_id in tree.leaf_ids():
            estimate = tree.nodes[leaf_id].leaf_estimate
            assert estimate.mean_treated == 1.0
            assert estimate.mean_control == 0.0
            assert estimate.effect == 1.0


# ---------------------------------------------------------------------------
# fit API


class TestFitApi:
    def test_single_arm_dataset_raises(self):
        X = np.arange(10.0)
        with pytest.raises(SingleArmError):
            bt.fit(make_dataset(X, np.ones(10, dtype=np.int64)))

    def test_invalid_config_rejected_before_fitting(self):
        ds = dataset_from_cells(REJECT_ROOT_CELLS)
        with pytest.raises(ValueError, match="max_depth"):
            bt.fit(ds, FitConfig(max_depth=0))

    def test_config_validation_messages(self):
        cases = {
            "max_depth": FitConfig(max_depth=0),
            "asmd_threshold": FitConfig(asmd_threshold=-0.1),
            "min_treat_group_size": FitConfig(min_treat_group_size=-1),
            "min_leaf_population": FitConfig(min_leaf_population=-1),
            "alpha": FitConfig(alpha=1.0),
            "correction": FitConfig(correction="bonferroni"),
            "positivity_method": FitConfig(positivity_method="trimming"),
            "crump_segments": FitConfig(crump_segments=0),
            "sp_alpha": FitConfig(sp_alpha=0.5),
            "feature_selection": FitConfig(feature_selection="gini"),
            "max_split_candidates": FitConfig(max_split_candidates=0),
        }
        for keyword, cfg in cases.items():
            with pytest.raises(ValueError, match=keyword.split("_")[0]):
                cfg.validate()

    def test_seed_is_irrelevant_under_max_asmd(self):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        a = bt.fit(ds, FitConfig(seed=0))
        b = bt.fit(ds, FitConfig(seed=99))
        assert [n.children for n in a.nodes] == [n.children for n in b.nodes]
        assert [n.n for n in a.nodes] == [n.n for n in b.nodes]

    def test_fit_is_deterministic(self):
        ds = bt.generate(bt.GeneratorSpec(kind="positivity", n=3000, seed=17))
        assert bt.fit(ds).to_json() == bt.fit(ds).to_json()


# ---------------------------------------------------------------------------
# leaf assignment


class TestAssignLeaves:
    @pytest.fixture()
    def tree(self):
        return bt.fit(dataset_from_cells(KEEP_VIA_CHILD_CELLS))

    def test_boundary_rows_go_left(self, tree):
        assert bt.assign_leaf(tree, [0.0, 0.0]) == 3
        assert bt.assign_leaf(tree, [0.0, 1.0]) == 4
        assert bt.assign_leaf(tree, [1.0, 0.0]) == 5
        assert bt.assign_leaf(tree, [1.0, 1.0]) == 6

    def test_unseen_values_route_by_comparison(self, tree):
        assert bt.assign_leaf(tree, [-5.0, -5.0]) == 3
        assert bt.assign_leaf(tree, [9.0, 9.0]) == 6
        assert bt.assign_leaf(tree, [0.5, 0.0]) == 5

    def test_counts_match_training_partition(self, tree):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        assignment = tree.assign_leaves(ds.X)
        for leaf_id in tree.leaf_ids():
            assert int((assignment == leaf_id).sum()) == tree.nodes[leaf_id].n

    def test_wrong_arity_raises(self, tree):
        with pytest.raises(ValueError, match="shape"):
            tree.assign_leaves(np.zeros((4, 3)))
        with pytest.raises(ValueError, match="shape"):
            tree.assign_leaves(np.zeros(8))

    def test_single_leaf_tree_maps_everything_to_root(self):
        tree = bt.fit(dataset_from_cells(PRUNE_TO_LEAF_CELLS))
        out = tree.assign_leaves(np.array([[0.0, 0.0], [37.0, -2.0]]))
        assert out.tolist() == [0, 0]


class TestPathPredicates:
    def test_paths_read_from_the_root(self):
        tree = bt.fit(dataset_from_cells(KEEP_VIA_CHILD_CELLS, names=("S", "A")))
        assert tree.path_predicates(0) == []
        assert tree.path_predicates(3) == ["S <= 0", "A <= 0"]
        assert tree.path_predicates(4) == ["S <= 0", "A > 0"]
        assert tree.path_predicates(5) == ["S > 0", "A <= 0"]
        assert tree.path_predicates(6) == ["S > 0", "A > 0"]

    def test_bad_id_raises(self):
        tree = bt.fit(dataset_from_cells(PRUNE_TO_LEAF_CELLS))
        with pytest.raises(ValueError, match="no node"):
            tree.path_predicates(12)


# ---------------------------------------------------------------------------
# serialization


class TestSerialization:
    def test_round_trip_is_exact(self):
        tree = bt.fit(dataset_from_cells(KEEP_VIA_CHILD_CELLS))
        text = tree.to_json()
        restored = bt.from_json(text)
        assert restored.to_json() == text
        assert restored.feature_names == tree.feature_names
        assert restored.cutoffs == tree.cutoffs
        assert [n.children for n in restored.nodes] == [n.children for n in tree.nodes]

    def test_version_gate(self):
        tree = bt.fit(dataset_from_cells(PRUNE_TO_LEAF_CELLS))
        blob = json.loads(tree.to_json())
        blob["version"] = "bicause_tree_v0"
        with pytest.raises(ValueError, match="bicause_tree_v0"):
            bt.from_json(json.dumps(blob))

    def test_malformed_document(self):
        with pytest.raises(ValueError, match="malformed"):
            bt.from_json("{not json")

    def test_unknown_split_feature(self):
        tree = bt.fit(dataset_from_cells(KEEP_VIA_CHILD_CELLS))
        blob = json.loads(tree.to_json())
        blob["nodes"][0]["split"]["feature"] = "zz"
        with pytest.raises(ValueError, match="zz"):
            bt.from_json(json.dumps(blob))

    def test_non_contiguous_ids_rejected(self):
        tree = bt.fit(dataset_from_cells(KEEP_VIA_CHILD_CELLS))
        blob = json.loads(tree.to_json())
        blob["nodes"][3]["id"] = 9
        with pytest.raises(ValueError, match="contiguous"):
            bt.from_json(json.dumps(blob))

    def test_infinite_imbalance_survives_the_round_trip(self):
        n = 100
        t = np.repeat([0, 1], n // 2)
        ds = make_dataset(t.astype(np.float64), t)
        tree = bt.fit(ds, FitConfig(min_treat_group_size=0))
        assert math.isinf(tree.nodes[0].split.asmd)
        restored = bt.from_json(tree.to_json())
        assert math.isinf(restored.nodes[0].split.asmd)
        assert restored.to_json() == tree.to_json()

    def test_config_round_trips_through_json(self):
        cfg = FitConfig(max_depth=3, alpha=0.01, max_split_candidates=32, seed=4)
        tree = bt.fit(dataset_from_cells(KEEP_VIA_CHILD_CELLS), cfg)
        restored = bt.from_json(tree.to_json())
        assert restored.config == cfg


# ---------------------------------------------------------------------------
# positivity marking


class TestPositivityMarking:
    def test_crump_flags_match_the_cutoffs(self):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        tree = bt.fit(ds)
        cutoffs = tree.cutoffs
        assert cutoffs.method == "crump"
        prevalences = [tree.nodes[i].leaf_estimate.prevalence for i in tree.leaf_ids()]
        per_sample = np.repeat(prevalences, [tree.nodes[i].n for i in tree.leaf_ids()])
        expected_alpha = crump_oracle(per_sample, tree.config.crump_segments)
        assert cutoffs.alpha == pytest.approx(expected_alpha, abs=1e-15)
        for leaf_id in tree.leaf_ids():
            node = tree.nodes[leaf_id]
            inside = cutoffs.low <= node.leaf_estimate.prevalence <= cutoffs.high
            assert node.violating == (not inside)

    def test_symmetric_marking_and_remarking(self):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        tree = bt.fit(ds)
        cutoffs = bt.mark_positivity(tree, ds, "symmetric_prevalence")
        assert cutoffs.method == "symmetric_prevalence"
        assert tree.cutoffs == cutoffs
        expected = symmetric_prevalence_cutoffs(ds.prevalence, tree.config.sp_alpha)
        assert (cutoffs.low, cutoffs.high) == (expected.low, expected.high)
        for leaf_id in tree.leaf_ids():
            node = tree.nodes[leaf_id]
            assert node.violating == (not cutoffs.contains(node.leaf_estimate.prevalence))

    def test_unknown_method(self):
        ds = dataset_from_cells(PRUNE_TO_LEAF_CELLS)
        tree = bt.fit(ds)
        with pytest.raises(ValueError, match="positivity"):
            bt.mark_positivity(tree, ds, "winsorize")

    def test_forced_violations_colour_the_dot_output(self):
        ds = dataset_from_cells(KEEP_VIA_CHILD_CELLS)
        tree = bt.fit(ds)
        for leaf_id in tree.leaf_ids():
            tree.nodes[leaf_id].violating = True
        dot = tree.to_dot()
        assert dot.startswith("digraph")
        assert dot.count('fillcolor="red"') == 4
        assert "x0 <= 0" in dot

    def test_clean_tree_has_no_red_nodes(self):
        tree = bt.fit(dataset_from_cells(REJECT_ROOT_CELLS))
        assert 'fillcolor="red"' not in tree.to_dot()


# ---------------------------------------------------------------------------
# structural invariants


def subtree_survives(tree, node_id):
    node = tree.nodes[node_id]
    if node.split is None:
        return False
    if node.split.p_adjusted <= tree.config.alpha:
        return True
    return any(subtree_survives(tree, child) for child in node.children)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_fitted_tree_invariants(data):
    n = data.draw(st.integers(12, 60))
    d = data.draw(st.integers(1, 3))
    grid = data.draw(st.sampled_from([2, 3, 7]))
    flat = data.draw(
        st.lists(st.integers(0, grid), min_size=n * d, max_size=n * d)
    )
    X = np.array(flat, dtype=np.float64).reshape(n, d)
    t = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    assume(0 < t.sum() < n)
    cfg = FitConfig(
        max_depth=data.draw(st.sampled_from([1, 2, 4])),
        min_treat_group_size=data.draw(st.sampled_from([1, 2])),
    )
    tree = bt.fit(make_dataset(X, t), cfg)

    assignment = tree.assign_leaves(X)
    for i, node in enumerate(tree.nodes):
        assert node.id == i
        assert node.n_treated + node.n_control == node.n
        assert 0.0 <= node.prevalence <= 1.0
        assert node.depth <= cfg.max_depth
        if node.children is not None:
            left, right = node.children
            assert left == right - 1 and left > node.id
            assert tree.nodes[left].depth == node.depth + 1
            assert tree.nodes[left].n + tree.nodes[right].n == node.n
            assert tree.nodes[left].n_treated + tree.nodes[right].n_treated == node.n_treated
            assert min(node.n_treated, node.n_control) >= cfg.min_treat_group_size
            assert node.split.asmd >= cfg.asmd_threshold
            assert node.split.p_adjusted >= node.split.p_raw
            assert subtree_survives(tree, node.id)
        else:
            assert node.leaf_estimate is not None
            assert node.leaf_estimate.prevalence == node.n_treated / node.n
            assert int((assignment == node.id).sum()) == node.n
            assert node.violating == (not tree.cutoffs.contains(node.leaf_estimate.prevalence))

    assert sorted(assignment.tolist()) == sorted(
        sum(([leaf] * tree.nodes[leaf].n for leaf in tree.leaf_ids()), [])
    )
    assert bt.fit(make_dataset(X, t), cfg).to_json() == tree.to_json()
