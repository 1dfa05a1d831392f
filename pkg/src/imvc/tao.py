"""Fixed-structure refinement of a fitted decision tree.

One pass visits nodes deepest-level-first: leaves take the majority
pseudo-label of the instances reaching them, internal nodes re-pick
their (feature, threshold) to minimize misrouting of the "care"
instances (those whose final label depends on the left/right choice).
The pass ends with empty-branch pruning and instance reallocation;
the outer loop feeds the tree its own predictions until nothing moves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dtree import INTERNAL, LEAF, DecisionTree, TreeNode

MAX_SELF_LABEL_ITERATIONS = 50


@dataclass
class CareInstance:
    index: int
    correct_left: bool
    correct_right: bool


def compute_reach(tree: DecisionTree, X: np.ndarray) -> dict[int, np.ndarray]:
    """Instance indices reaching every node under the current parameters."""
    X = np.asarray(X, dtype=np.float64)
    reach: dict[int, np.ndarray] = {}
    stack = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node_id, idx = stack.pop()
        reach[node_id] = idx
        node = tree.node(node_id)
        if node.kind == INTERNAL:
            go_left = X[idx, node.split_feature] <= node.split_value
            stack.append((node.left, idx[go_left]))
            stack.append((node.right, idx[~go_left]))
    return reach


def subtree_label(tree: DecisionTree, node_id: int, x: np.ndarray) -> int:
    """Leaf label reached when descending from node_id."""
    node = tree.node(node_id)
    while node.kind == INTERNAL:
        nxt = node.left if x[node.split_feature] <= node.split_value else node.right
        node = tree.node(nxt)
    return int(node.label)


def _subtree_labels_batch(tree: DecisionTree, node_id: int,
                          X: np.ndarray, idx: np.ndarray) -> np.ndarray:
    out = np.empty(len(idx), dtype=np.int64)
    stack = [(node_id, np.arange(len(idx)))]
    while stack:
        nid, pos = stack.pop()
        if len(pos) == 0:
            continue
        node = tree.node(nid)
        if node.kind == LEAF:
            out[pos] = node.label
            continue
        go_left = X[idx[pos], node.split_feature] <= node.split_value
        stack.append((node.left, pos[go_left]))
        stack.append((node.right, pos[~go_left]))
    return out


def relabel_leaf(tree: DecisionTree, leaf_id: int, idx: np.ndarray,
                 Y: np.ndarray) -> bool:
    """Majority pseudo-label; ties to the smallest index; empty set is a no-op."""
    node = tree.node(leaf_id)
    if node.kind != LEAF:
        raise ValueError(f"node {leaf_id} is not a leaf")
    if len(idx) == 0:
        return False
    new = int(np.argmax(np.bincount(Y[idx])))
    changed = new != node.label
    node.label = new
    return changed


def care_set(tree: DecisionTree, node_id: int, idx: np.ndarray,
             X: np.ndarray, Y: np.ndarray) -> list[CareInstance]:
    """Instances at node_id whose label is right on exactly one side.

    Instances correct on both sides or wrong on both sides cannot be
    affected by this node's split and are excluded.
    """
    node = tree.node(node_id)
    if node.kind != INTERNAL:
        raise ValueError(f"node {node_id} is not internal")
    if len(idx) == 0:
        return []
    left_labels = _subtree_labels_batch(tree, node.left, X, idx)
    right_labels = _subtree_labels_batch(tree, node.right, X, idx)
    y = Y[idx]
    care = []
    for pos, inst in enumerate(idx):
        cl = left_labels[pos] == y[pos]
        cr = right_labels[pos] == y[pos]
        if cl != cr:
            care.append(CareInstance(index=int(inst), correct_left=bool(cl),
                                     correct_right=bool(cr)))
    return care


def node_objective(node: TreeNode, X: np.ndarray,
                   care: list[CareInstance]) -> int:
    """Count of care instances routed to their incorrect side."""
    obj = 0
    for c in care:
        goes_left = X[c.index, node.split_feature] <= node.split_value
        if goes_left != c.correct_left:
            obj += 1
    return obj


def optimize_node(tree: DecisionTree, node_id: int, idx: np.ndarray,
                  X: np.ndarray, Y: np.ndarray) -> bool:
    """Re-pick (sf, sv) over all midpoint candidates on the reaching set.

    The current split is kept unless a candidate is strictly better;
    candidate ties resolve to the lowest misroute count, then lowest
    feature, then lowest threshold.
    """
    node = tree.node(node_id)
    if node.kind != INTERNAL:
        raise ValueError(f"node {node_id} is not internal")
    care = care_set(tree, node_id, idx, X, Y)
    if not care:
        return False
    current = node_objective(node, X, care)
    care_idx = np.array([c.index for c in care])
    correct_left = np.array([c.correct_left for c in care])

    best_obj = None
    best_sf = -1
    best_sv = 0.0
    for sf in range(X.shape[1]):
        vals = np.unique(X[idx, sf])
        if vals.size < 2:
            continue
        mids = (vals[:-1] + vals[1:]) / 2.0
        cv = X[care_idx, sf]
        objs = np.sum((cv[None, :] <= mids[:, None]) != correct_left[None, :],
                      axis=1)
        pos = int(np.argmin(objs))    # lowest threshold wins ties in-feature
        if best_obj is None or objs[pos] < best_obj:
            best_obj = int(objs[pos])
            best_sf = sf
            best_sv = float(mids[pos])
    if best_obj is not None and best_obj < current:
        node.split_feature = best_sf
        node.split_value = best_sv
        return True
    return False


def tao_pass(tree: DecisionTree, X: np.ndarray, Y: np.ndarray) -> bool:
    """One reverse breadth-first sweep plus pruning/reallocation.

    Returns True when any label, split parameter, or structure changed.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.int64)
    reach = compute_reach(tree, X)
    by_depth: dict[int, list[int]] = {}
    for node_id, node in tree.nodes.items():
        by_depth.setdefault(node.depth, []).append(node_id)
    changed = False
    for depth in sorted(by_depth, reverse=True):
        for node_id in sorted(by_depth[depth]):
            node = tree.node(node_id)
            if node.kind == LEAF:
                changed |= relabel_leaf(tree, node_id, reach[node_id], Y)
            else:
                changed |= optimize_node(tree, node_id, reach[node_id], X, Y)
    changed |= prune_and_reallocate(tree, X)[0]
    return changed


def prune_and_reallocate(tree: DecisionTree,
                         X: np.ndarray) -> tuple[bool, dict[int, np.ndarray]]:
    """Splice out internal nodes with an empty child; refresh reach sets.

    Returns (structure_changed, reach sets of the pruned tree).
    """
    X = np.asarray(X, dtype=np.float64)
    before = tree.n_nodes

    def prune(node_id: int, idx: np.ndarray) -> int:
        node = tree.node(node_id)
        if node.kind == LEAF:
            node.count = len(idx)
            return node_id
        go_left = X[idx, node.split_feature] <= node.split_value
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        if len(left_idx) == 0:
            return prune(node.right, idx)
        if len(right_idx) == 0:
            return prune(node.left, idx)
        node.count = len(idx)
        node.left = prune(node.left, left_idx)
        node.right = prune(node.right, right_idx)
        return node_id

    tree.root = prune(tree.root, np.arange(X.shape[0]))

    keep: set[int] = set()
    stack = [tree.root]
    while stack:
        node_id = stack.pop()
        keep.add(node_id)
        node = tree.node(node_id)
        if node.kind == INTERNAL:
            stack.extend((node.left, node.right))
    for node_id in list(tree.nodes):
        if node_id not in keep:
            del tree.nodes[node_id]
    tree.recompute_depths()
    return tree.n_nodes != before, compute_reach(tree, X)


def optimize_tree(tree: DecisionTree, X: np.ndarray, Y_init,
                  max_iterations: int = MAX_SELF_LABEL_ITERATIONS) -> DecisionTree:
    """Iterate tao_pass on self-generated labels until structural stability.

    The first pass uses the supplied pseudo-labels; later passes use the
    tree's own predictions from the previous iteration.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(Y_init, dtype=np.int64)
    for _ in range(max_iterations):
        changed = tao_pass(tree, X, labels)
        if not changed:
            break
        labels = tree.predict_batch(X)
    return tree


def misclassification(tree: DecisionTree, X: np.ndarray, Y) -> int:
    """Total count of instances whose routed leaf label differs from Y."""
    Y = np.asarray(Y, dtype=np.int64)
    return int(np.sum(tree.predict_batch(X) != Y))
