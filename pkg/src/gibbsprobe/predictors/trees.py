"""CART decision trees and bootstrap-aggregated forests.

Trees are stored as flat arrays (feature, threshold, left, right per node,
plus a class-probability vector per node), built in preorder so child
indices are always larger than their parent's. Rule at an internal node:
go left iff x[feature] <= threshold.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import Dataset
from ..errors import ArityError, SpecError
from .base import Predictor


class _TreeBuilder:
    def __init__(self, X, y_int, n_classes, max_depth, max_features, rng):
        self.X = X
        self.y = y_int
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.proba: list[np.ndarray] = []

    def _new_node(self, counts) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.proba.append(counts / counts.sum())
        return len(self.feature) - 1

    def _best_split(self, idx):
        """Exhaustive Gini search over candidate features and thresholds."""
        y = self.y[idx]
        n = idx.size
        d = self.X.shape[1]
        if self.max_features is None or self.max_features >= d:
            feats = range(d)
        else:
            feats = self.rng.choice(d, size=self.max_features, replace=False)
        best = (np.inf, -1, 0.0)
        onehot = np.zeros((n, self.n_classes))
        onehot[np.arange(n), y] = 1.0
        for f in feats:
            values = self.X[idx, f]
            order = np.argsort(values, kind="stable")
            v_sorted = values[order]
            cum = np.cumsum(onehot[order], axis=0)
            boundary = np.nonzero(v_sorted[:-1] < v_sorted[1:])[0]
            if boundary.size == 0:
                continue
            n_left = boundary + 1.0
            n_right = n - n_left
            left_counts = cum[boundary]
            right_counts = cum[-1] - left_counts
            gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
            gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
            weighted = (n_left * gini_left + n_right * gini_right) / n
            k = int(np.argmin(weighted))
            if weighted[k] < best[0] - 1e-12:
                thr = 0.5 * (v_sorted[boundary[k]] + v_sorted[boundary[k] + 1])
                best = (float(weighted[k]), int(f), float(thr))
        return best

    def build(self, idx, depth) -> int:
        counts = np.bincount(self.y[idx], minlength=self.n_classes).astype(float)
        node = self._new_node(counts)
        if depth >= self.max_depth or idx.size < 2 or np.count_nonzero(counts) < 2:
            return node
        score, f, thr = self._best_split(idx)
        if f < 0:
            return node
        go_left = self.X[idx, f] <= thr
        if not go_left.any() or go_left.all():
            return node
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(idx[go_left], depth + 1)
        self.right[node] = self.build(idx[~go_left], depth + 1)
        return node


class DecisionTreeModel(Predictor):
    kind = "decision-tree"

    def __init__(self, feature, threshold, left, right, proba, input_dim: int):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.proba = np.asarray(proba, dtype=float)
        self._input_dim = int(input_dim)

    @property
    def input_dim(self) -> int:
        return self._input_dim

    @property
    def n_classes(self) -> Optional[int]:
        return self.proba.shape[1]

    @property
    def differentiable(self) -> bool:
        return False

    def apply_batch(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = self._check_batch(X)
        idx = np.zeros(X.shape[0], dtype=int)
        while True:
            feat = self.feature[idx]
            internal = feat >= 0
            if not internal.any():
                return idx
            rows = np.nonzero(internal)[0]
            nodes = idx[rows]
            go_left = X[rows, self.feature[nodes]] <= self.threshold[nodes]
            idx[rows] = np.where(go_left, self.left[nodes], self.right[nodes])

    def decision_path(self, x) -> list[int]:
        """Node indices visited from the root down to the leaf."""
        x = self._check_input(x)
        node = 0
        path = [0]
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
            path.append(node)
        return path

    def raw_output_batch(self, X) -> np.ndarray:
        return self.proba[self.apply_batch(X)]

    def predict_proba_batch(self, X) -> np.ndarray:
        return self.raw_output_batch(X)

    def decision_value_batch(self, X) -> np.ndarray:
        if self.n_classes != 2:
            raise ArityError("decision_value needs a binary classifier")
        p = self.predict_proba_batch(X)
        return p[:, 1] - p[:, 0]

    def to_config(self) -> dict:
        return {"kind": self.kind,
                "feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(),
                "left": self.left.tolist(),
                "right": self.right.tolist(),
                "proba": self.proba.tolist(),
                "input_dim": self._input_dim}

    @classmethod
    def from_config(cls, cfg: dict) -> "DecisionTreeModel":
        return cls(cfg["feature"], cfg["threshold"], cfg["left"], cfg["right"],
                   cfg["proba"], cfg["input_dim"])


class RandomForestModel(Predictor):
    """Average of bootstrap CART trees; probabilities are leaf-frequency means."""

    kind = "random-forest"

    def __init__(self, trees: list[DecisionTreeModel]):
        if not trees:
            raise SpecError("forest needs at least one tree")
        self.trees = list(trees)

    @property
    def input_dim(self) -> int:
        return self.trees[0].input_dim

    @property
    def n_classes(self) -> Optional[int]:
        return self.trees[0].n_classes

    @property
    def differentiable(self) -> bool:
        return False

    def raw_output_batch(self, X) -> np.ndarray:
        acc = self.trees[0].predict_proba_batch(X).copy()
        for tree in self.trees[1:]:
            acc += tree.predict_proba_batch(X)
        return acc / len(self.trees)

    def predict_proba_batch(self, X) -> np.ndarray:
        return self.raw_output_batch(X)

    def decision_value_batch(self, X) -> np.ndarray:
        if self.n_classes != 2:
            raise ArityError("decision_value needs a binary classifier")
        p = self.predict_proba_batch(X)
        return p[:, 1] - p[:, 0]

    def to_config(self) -> dict:
        return {"kind": self.kind, "trees": [t.to_config() for t in self.trees]}

    @classmethod
    def from_config(cls, cfg: dict) -> "RandomForestModel":
        return cls([DecisionTreeModel.from_config(t) for t in cfg["trees"]])


def _check_classification(data: Dataset):
    if data.y is None or data.n_classes is None:
        raise SpecError("tree models need classification labels (set Dataset.n_classes)")


def fit_tree(data: Dataset, max_depth: int, seed: int = 0,
             max_features: Optional[int] = None) -> DecisionTreeModel:
    """Grow a CART classifier with Gini splitting down to max_depth."""
    if max_depth < 1:
        raise SpecError("max_depth must be >= 1")
    _check_classification(data)
    builder = _TreeBuilder(data.X, data.labels_int(), data.n_classes, max_depth,
                           max_features, np.random.default_rng(seed))
    builder.build(np.arange(data.n), 0)
    return DecisionTreeModel(builder.feature, builder.threshold, builder.left,
                             builder.right, np.vstack(builder.proba), data.dim)


def fit_forest(data: Dataset, n_trees: int, max_depth: int, seed: int = 0) -> RandomForestModel:
    """Bootstrap-aggregated trees with sqrt(d) feature subsampling per split.

    Per-tree seeds are spawned from the master seed, so the result does not
    depend on how tree training is scheduled.
    """
    if n_trees < 1:
        raise SpecError("n_trees must be >= 1")
    if max_depth < 1:
        raise SpecError("max_depth must be >= 1")
    _check_classification(data)
    max_features = max(1, int(np.sqrt(data.dim)))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    y_int = data.labels_int()
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        boot = rng.integers(0, data.n, size=data.n)
        builder = _TreeBuilder(data.X, y_int, data.n_classes, max_depth,
                               max_features, rng)
        builder.build(boot, 0)
        trees.append(DecisionTreeModel(builder.feature, builder.threshold, builder.left,
                                       builder.right, np.vstack(builder.proba), data.dim))
    return RandomForestModel(trees)
