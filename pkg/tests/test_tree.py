"""Tree structure validation, pruning identities, and the exact DP."""

import random
from math import fsum

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awpkit.tree import (
    HierTree,
    TreeStructureError,
    WeightTable,
    average_split_quality,
    induced_weighting,
    is_pruning,
    leaves_under,
    node_discrepancies,
    node_discrepancy,
    optimal_pruning,
    pruning_discrepancy,
    split_quality,
    tv_distance,
    validate,
)

from helpers import enumerate_prunings, random_pruning, random_tree, random_weight_table


def quad_tree():
    return HierTree.from_nested((("a", "b"), ("c", "d")))


class TestStructure:
    def test_from_nested_assigns_preorder_ids(self):
        t = HierTree.from_nested((("a", "b"), "c"))
        assert t.node_count == 5
        assert t.root_id == 0
        assert t.children(0) == (1, 4)
        assert t.children(1) == (2, 3)
        assert t.label(2) == "a"
        assert t.label(3) == "b"
        assert t.label(4) == "c"
        assert t.leaf_order == ("a", "b", "c")
        assert t.span(0) == (0, 3)
        assert t.span(1) == (0, 2)
        assert t.span(3) == (1, 2)
        assert t.leaf_count(1) == 2
        assert [t.depth(v) for v in range(5)] == [0, 1, 2, 2, 1]
        assert t.max_depth == 2
        assert t.parent(0) is None
        assert t.parent(3) == 1
        assert t.left(1) == 2 and t.right(1) == 3
        assert t.leaf_position("c") == 2
        assert t.internal_ids() == [0, 1]
        assert t.leaf_ids() == [2, 3, 4]

    def test_from_records_matches_nested_in_any_order(self):
        records = [
            ("I", 0, (1, 4)),
            ("I", 1, (2, 3)),
            ("L", 2, "a"),
            ("L", 3, "b"),
            ("L", 4, "c"),
        ]
        want = HierTree.from_nested((("a", "b"), "c"))
        for perm in (records, records[::-1], records[2:] + records[:2]):
            t = HierTree.from_records(perm)
            assert t.leaf_order == want.leaf_order
            assert all(t.children(v) == want.children(v) for v in range(5))

    @pytest.mark.parametrize(
        "records,kind",
        [
            ([], "empty-tree"),
            ([("I", 0, (1,)), ("L", 1, "a")], "non-binary-internal"),
            ([("I", 0, (1, 5)), ("L", 1, "a"), ("L", 2, "b")], "dangling-child"),
            (
                [("I", 0, (1, 2)), ("I", 1, (3, 3)), ("L", 2, "a"), ("L", 3, "b")],
                "multiple-parents",
            ),
            ([("I", 0, (0, 1)), ("L", 1, "a")], "cycle"),
            (
                [
                    ("L", 0, "a"),
                    ("I", 1, (2, 3)),
                    ("I", 2, (1, 4)),
                    ("L", 3, "b"),
                    ("L", 4, "c"),
                ],
                "cycle",
            ),
            ([("I", 0, (1, 2)), ("I", 1, (0, 3)), ("L", 2, "a"), ("L", 3, "b")], "no-root"),
            (
                [("I", 0, (1, 2)), ("L", 1, "a"), ("L", 2, "b"), ("L", 3, "c")],
                "multiple-roots",
            ),
            ([("I", 0, (1, 2)), ("L", 1, "a"), ("L", 1, "b")], "duplicate-node-id"),
            ([("I", 0, (1, 2)), ("L", 1, "a"), ("L", 7, "b")], "bad-node-ids"),
            ([("Z", 0, ()), ("L", 1, "a")], "bad-record"),
            ([("I", 0, (1, 2)), ("L", 1, "a"), ("L", 2, "a")], "duplicate-leaf-label"),
        ],
    )
    def test_invalid_records_identify_the_violation(self, records, kind):
        with pytest.raises(TreeStructureError) as err:
            HierTree.from_records(records)
        assert err.value.kind == kind

    def test_leaf_with_children_detected(self):
        with pytest.raises(TreeStructureError) as err:
            HierTree([(1, 2), (), ()], ["x", "a", "b"])
        assert err.value.kind == "leaf-with-children"

    def test_non_strict_defers_the_error_to_validate(self):
        t = HierTree.from_records([("I", 0, (0, 1)), ("L", 1, "a")], strict=False)
        with pytest.raises(TreeStructureError) as err:
            t.span(0)
        assert err.value.kind == "invalid-tree"
        with pytest.raises(TreeStructureError) as err:
            validate(t)
        assert err.value.kind == "cycle"

    def test_single_leaf_tree(self):
        t = HierTree.from_nested("only")
        assert t.node_count == 1
        assert t.is_leaf(t.root_id)
        assert t.leaf_order == ("only",)
        assert t.max_depth == 0
        assert is_pruning(t, [0])

    def test_unknown_node_id_raises(self):
        t = quad_tree()
        with pytest.raises(KeyError):
            t.span(99)
        with pytest.raises(KeyError):
            t.leaf_position("zz")

    @pytest.mark.parametrize("seed", range(8))
    def test_random_trees_have_contiguous_spans(self, seed):
        rng = random.Random(seed)
        t = random_tree(rng, rng.randint(2, 40))
        for v in range(t.node_count):
            lo, hi = t.span(v)
            assert 0 <= lo < hi <= t.leaf_count_total
            if not t.is_leaf(v):
                l, r = t.children(v)
                assert t.span(l)[0] == lo
                assert t.span(l)[1] == t.span(r)[0]
                assert t.span(r)[1] == hi
                assert t.parent(l) == v and t.parent(r) == v
        assert sorted(leaves_under(t, t.root_id)) == sorted(t.leaf_order)


class TestWeightTable:
    def test_rejects_negative_and_bad_total(self):
        with pytest.raises(ValueError):
            WeightTable({"a": -0.1, "b": 1.1})
        with pytest.raises(ValueError):
            WeightTable({"a": 0.5, "b": 0.5 + 2e-9})
        WeightTable({"a": 0.5, "b": 0.5 + 5e-10})

    def test_normalize(self):
        w = WeightTable({"a": 3.0, "b": 1.0}, normalize=True)
        assert w["a"] == 0.75 and w["b"] == 0.25
        assert abs(w.total() - 1.0) < 1e-15
        with pytest.raises(ValueError):
            WeightTable({"a": 0.0}, normalize=True)
        with pytest.raises(ValueError):
            WeightTable({})


class TestPruning:
    def test_membership_cases(self):
        t = quad_tree()
        assert is_pruning(t, [0])
        assert is_pruning(t, [1, 4])
        assert is_pruning(t, [2, 3, 4])
        assert not is_pruning(t, [])
        assert not is_pruning(t, [1])
        assert not is_pruning(t, [0, 2])
        assert not is_pruning(t, [1, 1, 4])

    @pytest.mark.parametrize("seed", range(6))
    def test_generated_prunings_are_prunings(self, seed):
        rng = random.Random(seed)
        t = random_tree(rng, rng.randint(2, 30))
        for _ in range(10):
            assert is_pruning(t, random_pruning(rng, t))


class TestDiscrepancy:
    def test_hand_computed_values(self):
        t = quad_tree()
        w = {"a": 0.5, "b": 0.1, "c": 0.2, "d": 0.2}
        assert abs(node_discrepancy(t, 0, w) - 0.5) < 1e-15
        assert abs(node_discrepancy(t, 1, w) - 0.4) < 1e-15
        assert node_discrepancy(t, 4, w) == 0.0
        assert node_discrepancy(t, 2, w) == 0.0
        disc = node_discrepancies(t, w)
        assert [abs(disc[v] - x) < 1e-15 for v, x in [(0, 0.5), (1, 0.4), (4, 0.0)]]
        assert abs(pruning_discrepancy(t, [1, 4], w) - 0.4) < 1e-15

    def test_pruning_discrepancy_requires_a_pruning(self):
        t = quad_tree()
        with pytest.raises(ValueError):
            pruning_discrepancy(t, [1], {"a": 1.0, "b": 0.0, "c": 0.0, "d": 0.0})

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_pruning_discrepancy_equals_l1_to_induced(self, seed):
        rng = random.Random(seed)
        t = random_tree(rng, rng.randint(2, 48))
        w = random_weight_table(rng, t.leaf_order)
        p = random_pruning(rng, t)
        masses = {v: fsum(w[lab] for lab in leaves_under(t, v)) for v in p}
        induced = induced_weighting(t, p, masses)
        l1 = fsum(abs(induced[lab] - w[lab]) for lab in t.leaf_order)
        d = pruning_discrepancy(t, p, w)
        assert abs(d - l1) <= 1e-12
        assert abs(d - 2.0 * tv_distance(induced, w)) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_pruning_discrepancy_at_most_twice_root(self, seed):
        rng = random.Random(seed)
        t = random_tree(rng, rng.randint(2, 48))
        w = random_weight_table(rng, t.leaf_order)
        p = random_pruning(rng, t)
        assert pruning_discrepancy(t, p, w) <= 2.0 * node_discrepancy(t, t.root_id, w) + 1e-9

    def test_insertion_order_does_not_change_results(self):
        t = quad_tree()
        w1 = {"a": 0.5, "b": 0.1, "c": 0.2, "d": 0.2}
        w2 = {"d": 0.2, "b": 0.1, "a": 0.5, "c": 0.2}
        assert node_discrepancy(t, 0, w1) == node_discrepancy(t, 0, w2)
        assert pruning_discrepancy(t, [1, 4], w1) == pruning_discrepancy(t, [1, 4], w2)


class TestInducedWeighting:
    def test_spreads_mass_uniformly(self):
        t = quad_tree()
        w = induced_weighting(t, [1, 4], {1: 0.6, 4: 0.4})
        assert w["a"] == w["b"] == 0.3
        assert w["c"] == w["d"] == 0.2

    def test_error_cases(self):
        t = quad_tree()
        with pytest.raises(ValueError):
            induced_weighting(t, [1], {1: 1.0})
        with pytest.raises(KeyError):
            induced_weighting(t, [1, 4], {1: 0.6})
        with pytest.raises(ValueError):
            induced_weighting(t, [1, 4], {1: -0.1, 4: 1.1})
        with pytest.raises(ValueError):
            induced_weighting(t, [1, 4], {1: 0.6, 4: 0.6})


class TestTvDistance:
    def test_basic_values(self):
        a = {"x": 1.0, "y": 0.0}
        b = {"x": 0.0, "y": 1.0}
        assert tv_distance(a, a) == 0.0
        assert tv_distance(a, b) == 1.0
        with pytest.raises(ValueError):
            tv_distance(a, {"x": 1.0})

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_metric_properties(self, seed):
        rng = random.Random(seed)
        labels = [f"x{i}" for i in range(rng.randint(2, 20))]
        w1 = random_weight_table(rng, labels)
        w2 = random_weight_table(rng, labels)
        w3 = random_weight_table(rng, labels)
        d12 = tv_distance(w1, w2)
        assert 0.0 <= d12 <= 1.0 + 1e-12
        assert d12 == tv_distance(w2, w1)
        assert d12 <= tv_distance(w1, w3) + tv_distance(w3, w2) + 1e-12


class TestSplitQuality:
    def test_none_when_no_positive_discrepancy(self):
        t = quad_tree()
        uniform = {lab: 0.25 for lab in "abcd"}
        assert split_quality(t, uniform) is None
        assert average_split_quality(t, uniform) is None

    def test_hand_computed(self):
        t = quad_tree()
        w = {"a": 0.5, "b": 0.1, "c": 0.2, "d": 0.2}
        # Only the root (0.5) and the ab node (0.4) have positive discrepancy;
        # the ab node's children are leaves, so its larger-child share is 0.
        assert abs(split_quality(t, w) - 0.8) < 1e-15
        assert abs(average_split_quality(t, w) - 0.4) < 1e-15


class TestOptimalPruning:
    def test_rejects_bad_budget(self):
        t = quad_tree()
        w = {lab: 0.25 for lab in "abcd"}
        with pytest.raises(ValueError):
            optimal_pruning(t, 0, w)
        with pytest.raises(ValueError):
            optimal_pruning(t, 5, w)

    def test_budget_one_is_the_root(self):
        t = quad_tree()
        w = {"a": 0.5, "b": 0.1, "c": 0.2, "d": 0.2}
        nodes, value = optimal_pruning(t, 1, w)
        assert nodes == (0,)
        assert value == node_discrepancy(t, 0, w)

    def test_full_budget_reaches_zero(self):
        rng = random.Random(3)
        t = random_tree(rng, 9)
        w = random_weight_table(rng, t.leaf_order)
        nodes, value = optimal_pruning(t, 9, w)
        assert value == 0.0
        assert sorted(nodes) == sorted(t.leaf_ids())

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_exhaustive_enumeration(self, seed):
        rng = random.Random(seed)
        t = random_tree(rng, rng.randint(2, 12))
        w = random_weight_table(rng, t.leaf_order)
        k = rng.randint(1, min(5, t.leaf_count_total))
        nodes, value = optimal_pruning(t, k, w)
        assert is_pruning(t, nodes)
        assert len(nodes) <= k
        assert abs(pruning_discrepancy(t, nodes, w) - value) <= 1e-12
        best = min(
            pruning_discrepancy(t, p, w)
            for p in enumerate_prunings(t, t.root_id, k)
        )
        assert abs(value - best) <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_value_non_increasing_in_budget(self, seed):
        rng = random.Random(seed)
        t = random_tree(rng, 14)
        w = random_weight_table(rng, t.leaf_order)
        values = [optimal_pruning(t, k, w)[1] for k in range(1, 15)]
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-12
