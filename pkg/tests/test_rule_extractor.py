import itertools

import numpy as np
import pytest

from src.core.service.rule_extractor import (
    TreeLeaf,
    TreeSplit,
    best_split,
    default_max_depth,
    export_text,
    extract_rules,
    feature_names_for,
    gini,
    leaves,
    parse_export_text,
    split_thresholds,
    tree_depth,
    tree_fit,
    tree_predict,
)

NAMES_1 = feature_names_for(1)
NAMES_2 = feature_names_for(2)


def _leaf(label, n=1):
    return TreeLeaf(class_label=label, class_counts=tuple(n if i == label else 0 for i in range(label + 1)))


def _structure(node):
    """Структура дерева без счётчиков классов и с порогами, округлёнными как в тексте."""
    if isinstance(node, TreeLeaf):
        return node.class_label
    return node.feature_index, round(node.threshold, 2), _structure(node.left), _structure(node.right)


@pytest.mark.parametrize(("counts", "expected"), [
    ([5], 0.0),
    ([5, 5], 0.5),
    ([1, 1, 1, 1], 0.75),
    ([3, 1], 0.375),
    ([0, 0], 0.0),
])
def test_gini(counts, expected):
    assert gini(counts) == pytest.approx(expected)


def test_two_points_split_at_midpoint():
    tree = tree_fit(np.array([[0.0], [1.0]]), np.array([0, 1]))
    assert isinstance(tree, TreeSplit)
    assert (tree.feature_index, tree.threshold) == (0, 0.5)
    assert (tree.left.class_label, tree.right.class_label) == (0, 1)


def _brute_force_best(X, y, n_classes):
    best = np.inf
    for feature in range(X.shape[1]):
        values = np.unique(X[:, feature])
        for a, b in itertools.pairwise(values):
            mask = X[:, feature] <= (a + b) / 2
            left = np.bincount(y[mask], minlength=n_classes)
            right = np.bincount(y[~mask], minlength=n_classes)
            best = min(best, (mask.sum() * gini(left) + (~mask).sum() * gini(right)) / len(y))
    return best


@pytest.mark.parametrize("seed", range(10))
def test_best_split_is_optimal(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(12, 2)).astype(float)
    y = rng.integers(0, 3, size=12)
    split = best_split(X, y, 3)
    if split is None:
        assert all(len(np.unique(X[:, f])) == 1 for f in range(2))
        return
    assert split.impurity == pytest.approx(_brute_force_best(X, y, 3), abs=1e-12)


def test_ties_prefer_lowest_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    split = best_split(X, np.array([0, 1]), 2)
    assert (split.feature_index, split.threshold) == (0, 0.5)


def test_ties_prefer_lowest_threshold():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    split = best_split(X, np.array([0, 1, 1, 0]), 2)
    assert split.threshold == 0.5


def test_pure_and_constant_nodes_are_leaves():
    assert tree_fit(np.array([[1.0], [2.0]]), np.array([1, 1]), n_classes=2) == TreeLeaf(1, (0, 2))
    leaf = tree_fit(np.array([[1.0], [1.0]]), np.array([0, 1]))
    assert leaf == TreeLeaf(0, (1, 1))


def test_fit_rejects_empty_input():
    with pytest.raises(ValueError, match="empty"):
        tree_fit(np.zeros((0, 1)), np.zeros(0, dtype=int))


def test_max_depth_is_respected(rng):
    X = rng.uniform(-1, 1, size=(200, 2))
    y = (np.sin(5 * X[:, 0]) > X[:, 1]).astype(int)
    assert tree_depth(tree_fit(X, y, max_depth=2)) <= 2
    assert default_max_depth(1) == 3
    assert default_max_depth(4) == 5


def test_unlimited_tree_fits_training_data(rng):
    X = rng.uniform(-1, 1, size=(100, 2))
    y = rng.integers(0, 4, size=100)
    tree = tree_fit(X, y)
    assert all(tree_predict(tree, x) == label for x, label in zip(X, y))


def test_threshold_tree_export_layout():
    tree = TreeSplit(0, 4.9600001, _leaf(1, 60), _leaf(0, 40))
    assert export_text(tree, NAMES_1) == (
        "|--- input_0 <= 4.96\n"
        "|   |--- class: Cluster_1\n"
        "|--- input_0 >  4.96\n"
        "|   |--- class: Cluster_0\n"
    )


def test_nested_export_layout():
    tree = TreeSplit(
        0, -0.004,
        TreeSplit(1, 1.5, _leaf(0), _leaf(2)),
        _leaf(1),
    )
    assert export_text(tree, NAMES_2) == (
        "|--- input_0 <= -0.00\n"
        "|   |--- input_1 <= 1.50\n"
        "|   |   |--- class: Cluster_0\n"
        "|   |--- input_1 >  1.50\n"
        "|   |   |--- class: Cluster_2\n"
        "|--- input_0 >  -0.00\n"
        "|   |--- class: Cluster_1\n"
    )


def test_parse_export_text_restores_structure(rng):
    X = rng.uniform(-5, 5, size=(150, 2))
    y = (X[:, 0] > 0).astype(int) + 2 * (X[:, 1] > 1).astype(int)
    tree = tree_fit(X, y, max_depth=3)
    parsed = parse_export_text(export_text(tree, NAMES_2), NAMES_2)
    assert _structure(parsed) == _structure(tree)


@pytest.mark.parametrize("text", [
    "input_0 <= 1.00\n",
    "|--- input_0 <= 1.00\n|   |--- class: Cluster_0\n",
    "|--- class: Cluster_0\n|--- class: Cluster_1\n",
])
def test_parse_rejects_malformed_text(text):
    with pytest.raises(ValueError):
        parse_export_text(text, NAMES_1)


def test_rules_partition_the_input_space(rng):
    X = rng.uniform(-5, 5, size=(200, 2))
    y = (X[:, 0] * X[:, 1] > 1).astype(int)
    tree = tree_fit(X, y, max_depth=4)
    rule_set = extract_rules(tree, NAMES_2)
    assert len(rule_set.rules) == len(leaves(tree))
    for x in rng.uniform(-6, 6, size=(500, 2)):
        matching = [rule for rule in rule_set.rules if rule.matches(x)]
        assert len(matching) == 1
        assert matching[0].class_label == tree_predict(tree, x)


def test_rules_fold_repeated_features():
    tree = TreeSplit(0, 2.0, TreeSplit(0, -2.0, _leaf(0), _leaf(1, 3)), _leaf(0))
    rule_set = extract_rules(tree, NAMES_1)
    assert rule_set.lines == [
        "IF input_0 <= -2.00 THEN Cluster_0",
        "IF input_0 > -2.00 AND input_0 <= 2.00 THEN Cluster_1",
        "IF input_0 > 2.00 THEN Cluster_0",
    ]
    assert rule_set.tsv_lines() == [
        "rule\tconditions\tclass\tsamples",
        "0\tinput_0 <= -2.0\tCluster_0\t1",
        "1\tinput_0 > -2.0 AND input_0 <= 2.0\tCluster_1\t3",
        "2\tinput_0 > 2.0\tCluster_0\t1",
    ]


def test_single_leaf_rule():
    rule_set = extract_rules(_leaf(0, 5), NAMES_1)
    assert rule_set.lines == ["IF TRUE THEN Cluster_0"]
    assert split_thresholds(_leaf(0)) == []


def _check_node_splits(node, X, y, n_classes):
    if isinstance(node, TreeLeaf):
        return
    mask = X[:, node.feature_index] <= node.threshold
    left = np.bincount(y[mask], minlength=n_classes)
    right = np.bincount(y[~mask], minlength=n_classes)
    impurity = (mask.sum() * gini(left) + (~mask).sum() * gini(right)) / len(y)
    if len(y) <= 50:
        assert impurity == pytest.approx(_brute_force_best(X, y, n_classes), abs=1e-12)
    _check_node_splits(node.left, X[mask], y[mask], n_classes)
    _check_node_splits(node.right, X[~mask], y[~mask], n_classes)


@pytest.mark.parametrize("seed", range(5))
def test_every_split_is_optimal(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 8, size=(45, 2)).astype(float)
    y = rng.integers(0, 3, size=45)
    _check_node_splits(tree_fit(X, y, n_classes=3), X, y, 3)


def _relabel(node, permutation):
    if isinstance(node, TreeLeaf):
        return permutation[node.class_label]
    return (node.feature_index, node.threshold,
            _relabel(node.left, permutation), _relabel(node.right, permutation))


def test_permuting_labels_keeps_splits(rng):
    X = rng.uniform(-5, 5, size=(60, 2))
    y = rng.integers(0, 4, size=60)
    permutation = np.array([2, 0, 3, 1])
    tree = tree_fit(X, y, n_classes=4)
    permuted = tree_fit(X, permutation[y], n_classes=4)
    assert _relabel(tree, permutation) == _relabel(permuted, np.arange(4))
