"""Random-forest classifier with Gini impurity-decrease feature importance."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import N_CLASSES, EncodedMatrix, TravelClass
from .errors import EmptyNode, InconsistentCounts, KOutOfRange, LayoutMismatch, NoSplits


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int = 12
    min_samples_split: int = 2
    features_per_split: int | None = None  # None -> ceil(sqrt(m))
    seed: int = 0

    def mtry(self, m: int) -> int:
        if self.features_per_split is not None:
            return min(self.features_per_split, m)
        return min(m, int(math.ceil(math.sqrt(m))))


@dataclass
class DecisionTree:
    """Flat binary tree. Leaves have feature == -1 and per-class counts."""

    feature: np.ndarray  # (nodes,) int, -1 at leaves
    threshold: np.ndarray  # (nodes,) float
    left: np.ndarray  # (nodes,) int child index
    right: np.ndarray
    counts: np.ndarray  # (nodes, C) class counts of training rows at the node
    column_importance: np.ndarray  # (m,) summed impurity decrease per column

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row, via vectorized level-by-level descent."""
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            rows = np.flatnonzero(active)
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaf = self.apply(X)
        counts = self.counts[leaf].astype(float)
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        leaf = self.apply(X)
        return np.argmax(self.counts[leaf], axis=1)  # argmax breaks ties toward low codes


@dataclass
class RandomForest:
    trees: list[DecisionTree]
    params: ForestParams
    column_names: tuple[str, ...]
    origin: tuple[str, ...]
    n_classes: int = N_CLASSES

    @property
    def m(self) -> int:
        return len(self.column_names)

    def to_json(self) -> str:
        payload = {
            "params": {
                "n_trees": self.params.n_trees,
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
                "features_per_split": self.params.features_per_split,
                "seed": self.params.seed,
            },
            "column_names": list(self.column_names),
            "origin": list(self.origin),
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "counts": t.counts.tolist(),
                    "column_importance": t.column_importance.tolist(),
                }
                for t in self.trees
            ],
        }
        return json.dumps(payload)


@dataclass(frozen=True)
class ImportanceReport:
    """Per source-feature normalized Gini importance, one-hot columns rolled up."""

    features: tuple[str, ...]
    scores: np.ndarray
    ranking: tuple[int, ...]  # feature indices by descending score, ties by schema order
    n_trees: int

    def ranked_features(self) -> list[str]:
        return [self.features[i] for i in self.ranking]

    def to_csv(self) -> str:
        lines = ["feature,score,rank"]
        rank_of = {i: r for r, i in enumerate(self.ranking)}
        for i, name in enumerate(self.features):
            lines.append(f"{name},{float(self.scores[i])!r},{rank_of[i]}")
        return "\n".join(lines) + "\n"


def gini(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=float)
    if counts.size == 0 or counts.sum() <= 0 or (counts < 0).any():
        raise EmptyNode("gini needs non-negative counts with a positive sum")
    p = counts / counts.sum()
    return float(1.0 - np.dot(p, p))


def impurity_decrease(parent, left, right) -> float:
    parent = np.asarray(parent, dtype=float)
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if parent.shape != left.shape or parent.shape != right.shape:
        raise InconsistentCounts("count vectors must share a shape")
    if not np.array_equal(parent, left + right):
        raise InconsistentCounts("parent counts must equal left + right")
    if left.sum() <= 0 or right.sum() <= 0:
        raise InconsistentCounts("empty child node")
    n = parent.sum()
    return float(gini(parent) - (left.sum() / n) * gini(left) - (right.sum() / n) * gini(right))


def _best_split(X, y_onehot, rows, columns):
    """Exact CART scan: best (column, threshold, gain) over candidate columns."""
    best = (None, 0.0, 0.0)  # column, threshold, gain
    n = rows.size
    total = y_onehot[rows].sum(axis=0)
    parent_gini = 1.0 - np.dot(total / n, total / n)
    for col in columns:
        values = X[rows, col]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y_onehot[rows[order]]
        # cumulative class counts left of each boundary
        cum = np.cumsum(sy, axis=0)
        boundary = np.flatnonzero(sv[:-1] < sv[1:])  # split between distinct values
        if boundary.size == 0:
            continue
        n_left = boundary + 1.0
        n_right = n - n_left
        left_counts = cum[boundary]
        right_counts = total - left_counts
        gini_left = 1.0 - np.einsum("ij,ij->i", left_counts, left_counts) / (n_left**2)
        gini_right = 1.0 - np.einsum("ij,ij->i", right_counts, right_counts) / (n_right**2)
        gain = parent_gini - (n_left / n) * gini_left - (n_right / n) * gini_right
        b = int(np.argmax(gain))
        if gain[b] > best[2]:
            threshold = 0.5 * (sv[boundary[b]] + sv[boundary[b] + 1])
            best = (int(col), float(threshold), float(gain[b]))
    return best


def _fit_tree(X, y, y_onehot, params: ForestParams, rng: np.random.Generator):
    n, m = X.shape
    mtry = params.mtry(m)
    bootstrap = rng.integers(0, n, size=n)
    feature, threshold, left, right, counts = [], [], [], [], []
    column_importance = np.zeros(m)

    def build(rows, depth):
        node = len(feature)
        node_counts = y_onehot[rows].sum(axis=0)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(node_counts)
        pure = np.count_nonzero(node_counts) <= 1
        if depth >= params.max_depth or rows.size < params.min_samples_split or pure:
            return node
        cols = np.sort(rng.choice(m, size=mtry, replace=False))
        col, thr, gain = _best_split(X, y_onehot, rows, cols)
        if col is None or gain <= 0.0:
            return node
        go_left = X[rows, col] <= thr
        # standard mean-decrease-impurity: weight the split's gain by the
        # fraction of the bootstrap sample reaching this node
        column_importance[col] += gain * (rows.size / n)
        feature[node] = col
        threshold[node] = thr
        left[node] = build(rows[go_left], depth + 1)
        right[node] = build(rows[~go_left], depth + 1)
        return node

    build(bootstrap, 0)
    return DecisionTree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(counts, dtype=float),
        column_importance,
    )


def fit_forest(matrix: EncodedMatrix, labels, params: ForestParams) -> RandomForest:
    """Fit params.n_trees CART trees on bootstrap samples, seeded per tree."""
    X = matrix.values
    y = np.asarray([int(l) for l in labels], dtype=int)
    y_onehot = np.zeros((y.size, N_CLASSES))
    y_onehot[np.arange(y.size), y] = 1.0
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = [
        _fit_tree(X, y, y_onehot, params, np.random.default_rng(s)) for s in seeds
    ]
    return RandomForest(trees, params, matrix.column_names, matrix.origin)


def predict_proba_forest(forest: RandomForest, X: np.ndarray) -> np.ndarray:
    """Mean leaf class distribution over all trees."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != forest.m:
        raise LayoutMismatch(f"expected {forest.m} columns, got {X.shape[1]}")
    out = np.zeros((X.shape[0], forest.n_classes))
    for tree in forest.trees:
        out += tree.predict_proba(X)
    return out / len(forest.trees)


def predict_forest_batch(forest: RandomForest, X: np.ndarray) -> np.ndarray:
    """Majority vote over trees; ties broken toward the lowest class code."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != forest.m:
        raise LayoutMismatch(f"expected {forest.m} columns, got {X.shape[1]}")
    votes = np.zeros((X.shape[0], forest.n_classes), dtype=int)
    for tree in forest.trees:
        pred = tree.predict(X)
        votes[np.arange(X.shape[0]), pred] += 1
    return np.argmax(votes, axis=1)  # argmax picks the lowest index on ties


def predict_forest(forest: RandomForest, row) -> TravelClass:
    return TravelClass(int(predict_forest_batch(forest, np.atleast_2d(row))[0]))


def feature_importance(forest: RandomForest) -> ImportanceReport:
    """Mean impurity decrease per column, rolled up to source features, sum-normalized."""
    per_column = np.zeros(forest.m)
    for tree in forest.trees:
        per_column += tree.column_importance
    per_column /= len(forest.trees)
    if per_column.sum() <= 0.0:
        raise NoSplits("no split occurred in any tree")
    features: list[str] = []
    for o in forest.origin:
        if o not in features:
            features.append(o)
    scores = np.zeros(len(features))
    index = {f: i for i, f in enumerate(features)}
    for col, o in enumerate(forest.origin):
        scores[index[o]] += per_column[col]
    scores /= scores.sum()
    ranking = tuple(int(i) for i in np.argsort(-scores, kind="stable"))
    return ImportanceReport(tuple(features), scores, ranking, len(forest.trees))


def select_top_k(report: ImportanceReport, k: int) -> list[str]:
    if not 1 <= k <= len(report.features):
        raise KOutOfRange(f"k={k} outside 1..{len(report.features)}")
    return report.ranked_features()[:k]
