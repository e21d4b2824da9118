import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from config import MIN_SAMPLES_SPLIT
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)

# Допуск при сравнении взвешенной неоднородности кандидатов
_IMPURITY_TOL = 1e-12

CLASS_PREFIX = "Cluster_"


@dataclass(frozen=True)
class TreeLeaf:
    class_label: int
    class_counts: tuple[int, ...]

    @property
    def n_samples(self) -> int:
        return sum(self.class_counts)


@dataclass(frozen=True)
class TreeSplit:
    """Внутренний узел: левое поддерево - feature <= threshold, правое - feature > threshold."""

    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    class_counts: tuple[int, ...] = ()


TreeNode = TreeLeaf | TreeSplit


def gini(class_counts: Sequence[int] | np.ndarray) -> float:
    """Неоднородность Джини 1 - Σ p_i^2; для пустого узла 0."""
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    return float(1.0 - np.sum((counts / total) ** 2))


def majority_label(class_counts: Sequence[int] | np.ndarray) -> int:
    # argmax возвращает первый максимум - наименьшую метку
    return int(np.argmax(class_counts))


@dataclass(frozen=True)
class SplitCandidate:
    feature_index: int
    threshold: float
    impurity: float


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int) -> SplitCandidate | None:
    """Лучшее разбиение по взвешенной неоднородности Джини.

    Кандидаты - середины между соседними различными значениями признака.
    При равенстве выбирается наименьший индекс признака, затем наименьший порог.
    """
    n = X.shape[0]
    one_hot = np.eye(n_classes)[y]
    total = one_hot.sum(axis=0)
    best: SplitCandidate | None = None

    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        xs = X[order, feature]
        distinct = xs[:-1] < xs[1:]
        if not np.any(distinct):
            continue

        left = np.cumsum(one_hot[order], axis=0)[:-1]
        right = total - left
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
        impurity = np.where(distinct, (n_left * gini_left + n_right * gini_right) / n, np.inf)

        position = int(np.flatnonzero(impurity <= impurity.min() + _IMPURITY_TOL)[0])
        value = float(impurity[position])
        if best is not None and value >= best.impurity - _IMPURITY_TOL:
            continue

        threshold = (xs[position] + xs[position + 1]) / 2.0
        if threshold >= xs[position + 1]:
            # середина округлилась до правого значения
            threshold = xs[position]
        best = SplitCandidate(feature, float(threshold), value)

    return best


class DecisionTreeBuilder:
    """Жадное построение дерева CART по критерию Джини."""

    def __init__(self, max_depth: int | None = None, min_samples_split: int = MIN_SAMPLES_SPLIT) -> None:
        self.max_depth = max_depth
        self.min_samples_split = max(min_samples_split, 2)

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int | None = None) -> TreeNode:
        """Строит дерево по матрице признаков и меткам классов.

        Args:
            X: Матрица (n, d).
            y: Метки классов 0..k-1 длины n.
            n_classes: Число классов (по умолчанию max(y) + 1).

        Returns:
            TreeNode: Корень дерева.

        """
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:  # noqa: PLR2004
            msg = "cannot fit a decision tree on empty input"
            raise ValueError(msg)
        if y.shape != (X.shape[0],) or np.any(y < 0):
            msg = "labels must be non-negative integers aligned with X"
            raise ValueError(msg)
        n_classes = int(y.max()) + 1 if n_classes is None else n_classes

        tree = self._build(X, y, n_classes, depth=0)
        logger.info("Fitted decision tree of depth %d with %d leaves", tree_depth(tree), len(leaves(tree)))
        return tree

    def _build(self, X: np.ndarray, y: np.ndarray, n_classes: int, depth: int) -> TreeNode:
        counts = tuple(int(c) for c in np.bincount(y, minlength=n_classes))
        leaf = TreeLeaf(class_label=majority_label(counts), class_counts=counts)

        if gini(counts) == 0.0 or X.shape[0] < self.min_samples_split:
            return leaf
        if self.max_depth is not None and depth >= self.max_depth:
            return leaf

        split = best_split(X, y, n_classes)
        if split is None:
            return leaf

        mask = X[:, split.feature_index] <= split.threshold
        return TreeSplit(
            feature_index=split.feature_index,
            threshold=split.threshold,
            left=self._build(X[mask], y[mask], n_classes, depth + 1),
            right=self._build(X[~mask], y[~mask], n_classes, depth + 1),
            class_counts=counts,
        )


def tree_fit(
        X: np.ndarray,
        y: np.ndarray,
        max_depth: int | None = None,
        min_samples_split: int = MIN_SAMPLES_SPLIT,
        n_classes: int | None = None,
) -> TreeNode:
    return DecisionTreeBuilder(max_depth, min_samples_split).fit(X, y, n_classes)


def default_max_depth(input_dim: int) -> int:
    return max(3, input_dim + 1)


def tree_predict(tree: TreeNode, x: Sequence[float] | np.ndarray) -> int:
    """Метка листа, в который попадает x (налево при feature <= threshold)."""
    node = tree
    while isinstance(node, TreeSplit):
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node.class_label


def tree_depth(tree: TreeNode) -> int:
    if isinstance(tree, TreeLeaf):
        return 0
    return 1 + max(tree_depth(tree.left), tree_depth(tree.right))


def leaves(tree: TreeNode) -> list[TreeLeaf]:
    if isinstance(tree, TreeLeaf):
        return [tree]
    return leaves(tree.left) + leaves(tree.right)


def split_thresholds(tree: TreeNode) -> list[tuple[int, float]]:
    """Все пары (признак, порог) внутренних узлов в порядке обхода."""
    if isinstance(tree, TreeLeaf):
        return []
    return [(tree.feature_index, tree.threshold), *split_thresholds(tree.left), *split_thresholds(tree.right)]


def feature_names_for(dim: int) -> list[str]:
    return [f"input_{i}" for i in range(dim)]


def export_text(tree: TreeNode, feature_names: Sequence[str]) -> str:
    """Текстовое представление дерева с порогами до двух знаков.

    Пример:
        |--- input_0 <= 4.96
        |   |--- class: Cluster_1
        |--- input_0 >  4.96
        |   |--- class: Cluster_0
    """
    lines: list[str] = []

    def render(node: TreeNode, depth: int) -> None:
        prefix = "|   " * depth + "|--- "
        if isinstance(node, TreeLeaf):
            lines.append(f"{prefix}class: {CLASS_PREFIX}{node.class_label}")
            return
        name = feature_names[node.feature_index]
        lines.append(f"{prefix}{name} <= {node.threshold:.2f}")
        render(node.left, depth + 1)
        lines.append(f"{prefix}{name} >  {node.threshold:.2f}")
        render(node.right, depth + 1)

    render(tree, 0)
    return "\n".join(lines) + "\n"


_LINE = re.compile(r"^((?:\|   )*)\|--- (.*)$")
_CONDITION = re.compile(r"^(\S+) (<=|> ) (\S+)$")
_CLASS = re.compile(rf"^class: {CLASS_PREFIX}(\d+)$")


def parse_export_text(text: str, feature_names: Sequence[str]) -> TreeNode:
    """Восстанавливает структуру дерева из export_text (пороги с точностью вывода)."""
    entries: list[tuple[int, str]] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        match = _LINE.match(line)
        if match is None:
            msg = f"line {number}: not a tree line: {line!r}"
            raise ValueError(msg)
        entries.append((len(match.group(1)) // 4, match.group(2)))

    position = 0

    def parse(depth: int) -> TreeNode:
        nonlocal position
        if position >= len(entries):
            msg = "unexpected end of tree text"
            raise ValueError(msg)
        line_depth, content = entries[position]
        if line_depth != depth:
            msg = f"unexpected indentation at entry {position}"
            raise ValueError(msg)

        if class_match := _CLASS.match(content):
            position += 1
            return TreeLeaf(class_label=int(class_match.group(1)), class_counts=())

        condition = _CONDITION.match(content)
        if condition is None or condition.group(2) != "<=":
            msg = f"expected '<=' condition, got {content!r}"
            raise ValueError(msg)
        name, threshold = condition.group(1), float(condition.group(3))
        position += 1
        left = parse(depth + 1)

        right_condition = _CONDITION.match(entries[position][1]) if position < len(entries) else None
        if right_condition is None or right_condition.group(1) != name or right_condition.group(2) != "> ":
            msg = f"missing '>' branch for {name}"
            raise ValueError(msg)
        position += 1
        right = parse(depth + 1)
        return TreeSplit(list(feature_names).index(name), threshold, left, right)

    tree = parse(0)
    if position != len(entries):
        msg = "trailing lines after tree"
        raise ValueError(msg)
    return tree


@dataclass(frozen=True)
class Condition:
    feature_index: int
    op: Literal["<=", ">"]
    threshold: float

    def holds(self, x: Sequence[float] | np.ndarray) -> bool:
        value = x[self.feature_index]
        return bool(value <= self.threshold) if self.op == "<=" else bool(value > self.threshold)


@dataclass(frozen=True)
class Rule:
    """Конъюнкция условий пути от корня к листу и класс листа."""

    conditions: tuple[Condition, ...]
    class_label: int
    n_samples: int

    def matches(self, x: Sequence[float] | np.ndarray) -> bool:
        return all(condition.holds(x) for condition in self.conditions)

    def render(self, feature_names: Sequence[str]) -> str:
        if not self.conditions:
            body = "TRUE"
        else:
            body = " AND ".join(
                f"{feature_names[c.feature_index]} {c.op} {c.threshold:.2f}" for c in self.conditions
            )
        return f"IF {body} THEN {CLASS_PREFIX}{self.class_label}"

    def render_exact(self, feature_names: Sequence[str]) -> str:
        return " AND ".join(
            f"{feature_names[c.feature_index]} {c.op} {VectorUtils.format_float(c.threshold)}"
            for c in self.conditions
        ) or "TRUE"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    feature_names: tuple[str, ...]

    @property
    def lines(self) -> list[str]:
        return [rule.render(self.feature_names) for rule in self.rules]

    def tsv_lines(self) -> list[str]:
        """Одна строка на правило с полной точностью порогов."""
        rows = ["rule\tconditions\tclass\tsamples"]
        rows.extend(
            f"{i}\t{rule.render_exact(self.feature_names)}\t{CLASS_PREFIX}{rule.class_label}\t{rule.n_samples}"
            for i, rule in enumerate(self.rules)
        )
        return rows


def _fold(conditions: list[Condition]) -> tuple[Condition, ...]:
    """Сворачивает условия по каждому признаку в самый узкий интервал."""
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    for c in conditions:
        if c.op == ">":
            lower[c.feature_index] = max(lower.get(c.feature_index, -np.inf), c.threshold)
        else:
            upper[c.feature_index] = min(upper.get(c.feature_index, np.inf), c.threshold)

    folded: list[Condition] = []
    for feature in sorted(set(lower) | set(upper)):
        if feature in lower:
            folded.append(Condition(feature, ">", lower[feature]))
        if feature in upper:
            folded.append(Condition(feature, "<=", upper[feature]))
    return tuple(folded)


def extract_rules(tree: TreeNode, feature_names: Sequence[str]) -> RuleSet:
    """Превращает каждый путь от корня к листу в правило ЕСЛИ-ТО."""
    rules: list[Rule] = []

    def walk(node: TreeNode, path: list[Condition]) -> None:
        if isinstance(node, TreeLeaf):
            rules.append(Rule(_fold(path), node.class_label, node.n_samples))
            return
        walk(node.left, [*path, Condition(node.feature_index, "<=", node.threshold)])
        walk(node.right, [*path, Condition(node.feature_index, ">", node.threshold)])

    walk(tree, [])
    return RuleSet(rules=tuple(rules), feature_names=tuple(feature_names))
