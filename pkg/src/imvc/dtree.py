"""CART construction with the Gini criterion over concatenated features.

Split search is exhaustive: every feature, every midpoint between
consecutive distinct sorted values. Candidate scores are compared in
exact rational arithmetic so tie-breaking (lowest impurity, then lowest
feature, then lowest threshold) is reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

INTERNAL = "internal"
LEAF = "leaf"


@dataclass
class TreeNode:
    id: int
    kind: str                    # "internal" or "leaf"
    depth: int
    split_feature: int | None = None
    split_value: float | None = None
    label: int | None = None
    left: int | None = None
    right: int | None = None
    count: int | None = None     # training instances reaching this node


class DecisionTree:
    """Binary threshold tree routing with x[sf] <= sv going left."""

    def __init__(self, nodes: dict[int, TreeNode], root: int, k: int,
                 feature_dim: int):
        self.nodes = nodes
        self.root = root
        self.k = k
        self.feature_dim = feature_dim

    def node(self, node_id: int) -> TreeNode:
        return self.nodes[node_id]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes.values() if n.kind == LEAF]

    def max_depth(self) -> int:
        return max(n.depth for n in self.nodes.values())

    def fresh_id(self) -> int:
        return max(self.nodes) + 1 if self.nodes else 0

    def predict(self, x: np.ndarray) -> int:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.feature_dim:
            raise ValueError(
                f"expected {self.feature_dim} features, got {x.shape[0]}"
            )
        node = self.nodes[self.root]
        while node.kind == INTERNAL:
            nxt = node.left if x[node.split_feature] <= node.split_value else node.right
            node = self.nodes[nxt]
        return int(node.label)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_dim:
            raise ValueError(
                f"expected (n, {self.feature_dim}) matrix, got {X.shape}"
            )
        out = np.empty(X.shape[0], dtype=np.int64)
        idx = np.arange(X.shape[0])
        stack = [(self.root, idx)]
        while stack:
            node_id, ids = stack.pop()
            if len(ids) == 0:
                continue
            node = self.nodes[node_id]
            if node.kind == LEAF:
                out[ids] = node.label
                continue
            go_left = X[ids, node.split_feature] <= node.split_value
            stack.append((node.left, ids[go_left]))
            stack.append((node.right, ids[~go_left]))
        return out

    def recompute_depths(self) -> None:
        stack = [(self.root, 0)]
        while stack:
            node_id, depth = stack.pop()
            node = self.nodes[node_id]
            node.depth = depth
            if node.kind == INTERNAL:
                stack.append((node.left, depth + 1))
                stack.append((node.right, depth + 1))


def gini(labels) -> float:
    """Gini impurity 1 - sum p_i^2 of a non-empty label multiset."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("gini of an empty set is undefined")
    counts = np.bincount(labels)
    p = counts / labels.size
    return float(1.0 - np.sum(p * p))


def split_gini(X: np.ndarray, labels, sf: int, sv: float) -> float:
    """Size-weighted child impurity of the split x[sf] <= sv."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("cannot score a split on zero instances")
    go_left = X[:, sf] <= sv
    n = labels.size
    score = 0.0
    for mask in (go_left, ~go_left):
        if np.any(mask):
            score += (mask.sum() / n) * gini(labels[mask])
    return score


def _exact_counts_score(a: int, b: int, n_left: int, n_right: int) -> Fraction:
    """sum_c cL_c^2 / nL + sum_c cR_c^2 / nR as an exact rational.

    Maximizing this quantity is equivalent to minimizing the weighted
    Gini impurity of the split.
    """
    return Fraction(a * n_right + b * n_left, n_left * n_right)


def best_split(X: np.ndarray, labels) -> tuple[int, float] | None:
    """Exhaustive minimum-Gini split; None when no feature separates.

    Ties resolve to the lowest feature index, then the lowest threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n, d = X.shape
    if n < 2:
        return None
    k = int(y.max()) + 1
    total = np.bincount(y, minlength=k)

    best_score: Fraction | None = None
    best_sf = -1
    best_sv = 0.0
    for sf in range(d):
        order = np.argsort(X[:, sf], kind="stable")
        xs = X[order, sf]
        ys = y[order]
        left = np.zeros(k, dtype=np.int64)
        right = total.copy()
        a = 0                         # sum of squared left counts
        b = int(np.sum(right * right))
        for i in range(n - 1):
            c = ys[i]
            a += 2 * left[c] + 1
            left[c] += 1
            b -= 2 * right[c] - 1
            right[c] -= 1
            if xs[i + 1] == xs[i]:
                continue
            score = _exact_counts_score(a, b, i + 1, n - i - 1)
            if best_score is None or score > best_score:
                best_score = score
                best_sf = sf
                best_sv = (xs[i] + xs[i + 1]) / 2.0
    if best_score is None:
        return None
    return best_sf, float(best_sv)


def _majority(labels: np.ndarray) -> int:
    # ties resolve to the smallest cluster index
    return int(np.argmax(np.bincount(labels)))


def build_tree(X: np.ndarray, Y, max_depth: int, min_num: int,
               k: int | None = None) -> DecisionTree:
    """Recursive CART growth guided by pseudo-labels.

    A node becomes a leaf when it holds fewer than min_num instances,
    sits at max_depth, is label-pure, or admits no separating split.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot build a tree from zero instances")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y lengths differ")
    if max_depth < 1 or min_num < 1:
        raise ValueError("max_depth and min_num must be at least 1")
    if k is None:
        k = int(Y.max()) + 1

    nodes: dict[int, TreeNode] = {}
    counter = [0]

    def grow(idx: np.ndarray, depth: int) -> int:
        node_id = counter[0]
        counter[0] += 1
        sub_y = Y[idx]
        split = None
        if (len(idx) >= min_num and depth < max_depth
                and np.unique(sub_y).size > 1):
            split = best_split(X[idx], sub_y)
        if split is None:
            nodes[node_id] = TreeNode(id=node_id, kind=LEAF, depth=depth,
                                      label=_majority(sub_y), count=len(idx))
            return node_id
        sf, sv = split
        go_left = X[idx, sf] <= sv
        node = TreeNode(id=node_id, kind=INTERNAL, depth=depth,
                        split_feature=sf, split_value=sv, count=len(idx))
        nodes[node_id] = node
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node_id

    root = grow(np.arange(X.shape[0]), 0)
    return DecisionTree(nodes=nodes, root=root, k=k, feature_dim=X.shape[1])
