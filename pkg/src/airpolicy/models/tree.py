"""Weighted CART regression tree with exhaustive axis-aligned split search.

One implementation serves the standalone tree, the forest members, and the
boosting base learners; sample weights default to ones, which makes the
unweighted fit a special case rather than a separate code path. Splits
minimize the weighted sum of child squared errors over all output columns;
candidates are midpoints of consecutive distinct sorted values, rows with
value <= threshold go left, and ties prefer the lower feature index, then
the lower threshold.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import InsufficientDataError
from .base import ModelSpec, TrainedModel, register_kind


class TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value: np.ndarray, feature: int = -1, threshold: float = 0.0,
                 left: "TreeNode | None" = None, right: "TreeNode | None" = None):
        self.value = value
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self) -> dict:
        d = {"value": [float(v) for v in self.value]}
        if not self.is_leaf:
            d["feature"] = self.feature
            d["threshold"] = float(self.threshold)
            d["left"] = self.left.to_dict()
            d["right"] = self.right.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        value = np.array(d["value"], dtype=np.float64)
        if "feature" not in d:
            return cls(value)
        return cls(
            value,
            feature=d["feature"],
            threshold=d["threshold"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _weighted_mean(Y: np.ndarray, w: np.ndarray) -> np.ndarray:
    return (w @ Y) / w.sum()


def _node_sse(Y: np.ndarray, w: np.ndarray, mean: np.ndarray) -> float:
    Yc = Y - mean
    return float((w[:, None] * Yc * Yc).sum())


def _grow(X: np.ndarray, Y: np.ndarray, w: np.ndarray, depth: int, max_depth: int) -> TreeNode:
    mean = _weighted_mean(Y, w)
    node = TreeNode(mean)
    if depth >= max_depth or X.shape[0] < 2:
        return node
    sse = _node_sse(Y, w, mean)
    if sse <= 0.0:
        return node
    feature, threshold, score = kernels.best_split(X, Y, w)
    if feature < 0 or not (score < sse):
        return node
    go_left = X[:, feature] <= threshold
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(X[go_left], Y[go_left], w[go_left], depth + 1, max_depth)
    node.right = _grow(X[~go_left], Y[~go_left], w[~go_left], depth + 1, max_depth)
    return node


def grow_tree(X: np.ndarray, Y: np.ndarray, w: np.ndarray | None = None,
              max_depth: int = 5) -> TreeNode:
    """Grow a tree on raw arrays; ``w`` is per-row weight, ones when omitted."""
    if X.shape[0] < 1:
        raise InsufficientDataError("cannot grow a tree on zero rows")
    if w is None:
        w = np.ones(X.shape[0])
    return _grow(np.asarray(X, dtype=np.float64),
                 np.asarray(Y, dtype=np.float64),
                 np.asarray(w, dtype=np.float64), 0, max_depth)


def tree_predict(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty((X.shape[0], root.value.shape[0]))
    for i in range(X.shape[0]):
        node = root
        while not node.is_leaf:
            node = node.left if X[i, node.feature] <= node.threshold else node.right
        out[i] = node.value
    return out


class DecisionTreeModel(TrainedModel):
    def __init__(self, spec: ModelSpec, input_dim: int, output_dim: int, root: TreeNode):
        super().__init__(spec, input_dim, output_dim)
        self.root = root

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return tree_predict(self.root, X)

    def _params(self) -> dict:
        return {"root": self.root.to_dict()}


def _fit_dtr(spec: ModelSpec, X: np.ndarray, Y: np.ndarray) -> DecisionTreeModel:
    root = grow_tree(X, Y, max_depth=spec.params["max_depth"])
    return DecisionTreeModel(spec, X.shape[1], Y.shape[1], root)


def _load_dtr(spec: ModelSpec, input_dim: int, output_dim: int, params: dict) -> DecisionTreeModel:
    return DecisionTreeModel(spec, input_dim, output_dim, TreeNode.from_dict(params["root"]))


register_kind("dtr", _fit_dtr, _load_dtr)
