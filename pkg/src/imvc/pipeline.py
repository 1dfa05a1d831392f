"""End-to-end orchestration: pretraining, pseudo-labels, tree, joint cycles.

Initialization pretrains one autoencoder per view on reconstruction,
runs k-means on the concatenated embeddings and fits a Gini tree on the
concatenated original features. Each joint cycle then (a) retrains the
autoencoders against the tree's one-hot outputs through the soft
assignment and (b) refreshes pseudo-labels and re-optimizes the tree.
The tree's leaf outputs are the model's final cluster assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dtree, nncore, tao
from .kmeans import kmeans as run_kmeans

EMBED_DIMS = (128, 64)


@dataclass
class PipelineConfig:
    k: int
    e1: int = 200
    e2: int = 400
    max_depth: int = 10
    min_num: int = 10
    lam: float = 0.1
    lr: float = 0.001
    seed: int = 0
    outer_cycles: int = 5
    standardize: bool = False

    def validate(self) -> None:
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.e1 < 1 or self.e2 < 1:
            raise ValueError("epoch counts must be at least 1")
        if self.lam < 0:
            raise ValueError("trade-off coefficient must be non-negative")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.outer_cycles < 0:
            raise ValueError("outer_cycles must be non-negative")


@dataclass
class LabelSet:
    hard: np.ndarray         # (n,) ints in [0, k)
    indicator: np.ndarray    # (n, k) one-hot

    @classmethod
    def from_hard(cls, hard: np.ndarray, k: int) -> "LabelSet":
        hard = np.asarray(hard, dtype=np.int64)
        indicator = np.zeros((hard.shape[0], k), dtype=np.float64)
        indicator[np.arange(hard.shape[0]), hard] = 1.0
        return cls(hard=hard, indicator=indicator)


@dataclass
class ModelState:
    config: PipelineConfig
    autoencoders: list[nncore.Autoencoder]
    centers: list[np.ndarray]                 # per view, (k, embed_dim)
    tree: dtree.DecisionTree
    labels: LabelSet                          # tree outputs on training data
    kmeans_labels: np.ndarray                 # latest pseudo-labels
    view_dims: list[int]
    standardizer: list[tuple[np.ndarray, np.ndarray]] | None = None
    loss_history: dict[str, list] = field(default_factory=dict)
    converged: bool = False
    cycles_run: int = 0

    @property
    def view_offsets(self) -> list[int]:
        return [int(x) for x in np.concatenate(([0], np.cumsum(self.view_dims)[:-1]))]

    def preprocess(self, views: list[np.ndarray]) -> list[np.ndarray]:
        views = [np.asarray(v, dtype=np.float64) for v in views]
        if len(views) != len(self.view_dims):
            raise ValueError(
                f"expected {len(self.view_dims)} views, got {len(views)}"
            )
        for v, (view, dim) in enumerate(zip(views, self.view_dims)):
            if view.shape[1] != dim:
                raise ValueError(
                    f"view {v} has {view.shape[1]} features, expected {dim}"
                )
        if self.standardizer is None:
            return views
        return [
            apply_standardizer(view, mean, std)
            for view, (mean, std) in zip(views, self.standardizer)
        ]

    def predict(self, views: list[np.ndarray]) -> np.ndarray:
        X = np.hstack(self.preprocess(views))
        return self.tree.predict_batch(X)


def fit_standardizer(view: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population std; constant features get std 1."""
    mean = view.mean(axis=0)
    std = view.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def apply_standardizer(view, mean, std) -> np.ndarray:
    return (np.asarray(view, dtype=np.float64) - mean) / std


def concat_embeddings(per_view_z: list[np.ndarray]) -> np.ndarray:
    """Column-wise join of the per-view embeddings, view order preserved."""
    rows = {z.shape[0] for z in per_view_z}
    if len(rows) != 1:
        raise ValueError(f"views disagree on instance count: {sorted(rows)}")
    return np.hstack(per_view_z)


def _embed_all(state: ModelState, views: list[np.ndarray]) -> list[np.ndarray]:
    return [ae.forward(view)[0] for ae, view in zip(state.autoencoders, views)]


def _train_view(ae: nncore.Autoencoder, X: np.ndarray, epochs: int, lr: float,
                yind=None, centers=None, lam: float = 0.0) -> list[float]:
    params = ae.parameters()
    train_centers = centers is not None and lam > 0.0
    if train_centers:
        params = params + [centers]
    adam = nncore.AdamState.create(params, lr=lr)
    history = []
    for _ in range(epochs):
        recon, ce, grads, cgrad = ae.loss_and_grads(X, yind=yind,
                                                    centers=centers, lam=lam)
        history.append(nncore.combined_loss(recon, ce, lam))
        if train_centers:
            grads = grads + [cgrad]
        nncore.adam_step(params, grads, adam)
    return history


def init_centers(Z: np.ndarray, hard: np.ndarray, k: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Per-label embedding means; empty labels fall back to the global
    mean plus small seeded jitter."""
    centers = np.empty((k, Z.shape[1]))
    global_mean = Z.mean(axis=0)
    jitter_scale = 1e-3 * float(Z.std())
    for j in range(k):
        members = hard == j
        if np.any(members):
            centers[j] = Z[members].mean(axis=0)
        else:
            centers[j] = global_mean + jitter_scale * rng.standard_normal(Z.shape[1])
    return centers


def initialize(views: list[np.ndarray], config: PipelineConfig) -> ModelState:
    """Algorithmic warm start: pretrain, pseudo-label, build the tree."""
    config.validate()
    views = [np.asarray(v, dtype=np.float64) for v in views]
    n = views[0].shape[0]
    for v, view in enumerate(views):
        if view.shape[0] != n:
            raise ValueError(f"view {v} has {view.shape[0]} rows, expected {n}")
    view_dims = [v.shape[1] for v in views]

    standardizer = None
    if config.standardize:
        standardizer = [fit_standardizer(v) for v in views]
        views = [apply_standardizer(v, m, s) for v, (m, s) in zip(views, standardizer)]

    autoencoders = [
        nncore.Autoencoder.create(dim, EMBED_DIMS, seed=[config.seed, v, 1],
                                  view_index=v)
        for v, dim in enumerate(view_dims)
    ]
    pretrain_losses = [
        _train_view(ae, view, config.e1, config.lr)
        for ae, view in zip(autoencoders, views)
    ]

    Z = concat_embeddings([ae.forward(view)[0]
                           for ae, view in zip(autoencoders, views)])
    result = run_kmeans(Z, config.k, seed=[config.seed, 100])
    X = np.hstack(views)
    tree = dtree.build_tree(X, result.labels, config.max_depth, config.min_num,
                            k=config.k)
    labels = LabelSet.from_hard(tree.predict_batch(X), config.k)
    centers = [np.zeros((config.k, EMBED_DIMS[-1])) for _ in views]
    return ModelState(
        config=config,
        autoencoders=autoencoders,
        centers=centers,
        tree=tree,
        labels=labels,
        kmeans_labels=result.labels,
        view_dims=view_dims,
        standardizer=standardizer,
        loss_history={"pretrain": pretrain_losses, "feature": [], "tree": []},
    )


def feature_phase(state: ModelState, views: list[np.ndarray],
                  cycle: int = 0) -> None:
    """Retrain each view against the tree's one-hot outputs (Lr + lam*Lce)."""
    config = state.config
    X = np.hstack(views)
    yhard = state.tree.predict_batch(X)
    state.labels = LabelSet.from_hard(yhard, config.k)
    traces = []
    for v, (ae, view) in enumerate(zip(state.autoencoders, views)):
        Z = ae.forward(view)[0]
        rng = np.random.default_rng([config.seed, 200, cycle, v])
        centers = init_centers(Z, yhard, config.k, rng)
        trace = _train_view(ae, view, config.e2, config.lr,
                            yind=state.labels.indicator, centers=centers,
                            lam=config.lam)
        state.centers[v] = centers
        traces.append(trace)
    state.loss_history["feature"].append(traces)


def tree_phase(state: ModelState, views: list[np.ndarray],
               cycle: int = 0) -> None:
    """Refresh pseudo-labels from the embeddings and re-optimize the tree."""
    config = state.config
    Z = concat_embeddings(_embed_all(state, views))
    result = run_kmeans(Z, config.k, seed=[config.seed, 300, cycle])
    state.kmeans_labels = result.labels
    X = np.hstack(views)
    tao.optimize_tree(state.tree, X, result.labels)
    state.labels = LabelSet.from_hard(state.tree.predict_batch(X), config.k)
    state.loss_history["tree"].append(
        tao.misclassification(state.tree, X, state.labels.hard)
    )


def fit(views: list[np.ndarray], config: PipelineConfig) -> ModelState:
    """Initialization followed by alternating joint-optimization cycles.

    Stops early once the tree's hard labels repeat between cycles.
    """
    state = initialize(views, config)
    if config.standardize:
        views = [
            apply_standardizer(v, m, s)
            for v, (m, s) in zip(views, state.standardizer)
        ]
    else:
        views = [np.asarray(v, dtype=np.float64) for v in views]
    prev = state.labels.hard.copy()
    for cycle in range(config.outer_cycles):
        feature_phase(state, views, cycle=cycle)
        tree_phase(state, views, cycle=cycle)
        state.cycles_run = cycle + 1
        if np.array_equal(state.labels.hard, prev):
            state.converged = True
            break
        prev = state.labels.hard.copy()
    return state


@dataclass
class ExplanationStep:
    feature: int          # global feature index
    view: int             # 0-based view index
    local_feature: int    # index within the view
    threshold: float
    went_left: bool


def explain(state: ModelState, x_views: list[np.ndarray]) -> tuple[list[ExplanationStep], int]:
    """Root-to-leaf decision path for one instance, with view attribution."""
    x = np.hstack([np.asarray(v, dtype=np.float64).ravel() for v in
                   state.preprocess([np.atleast_2d(v) for v in x_views])])
    if x.shape[0] != state.tree.feature_dim:
        raise ValueError(
            f"expected {state.tree.feature_dim} features, got {x.shape[0]}"
        )
    offsets = np.asarray(state.view_offsets)
    path = []
    node = state.tree.node(state.tree.root)
    while node.kind == dtree.INTERNAL:
        sf = node.split_feature
        view = int(np.searchsorted(offsets, sf, side="right") - 1)
        went_left = bool(x[sf] <= node.split_value)
        path.append(ExplanationStep(
            feature=sf, view=view, local_feature=int(sf - offsets[view]),
            threshold=float(node.split_value), went_left=went_left,
        ))
        node = state.tree.node(node.left if went_left else node.right)
    return path, int(node.label)
