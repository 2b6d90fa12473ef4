"""Histogram gradient-boosted trees with a softmax multiclass objective.

One regression tree per class per boosting round, fitted to the softmax
gradient/hessian with the usual second-order gain

    0.5 * (GL^2/(HL+l2) + GR^2/(HR+l2) - G^2/(H+l2))

and leaf weight ``-lr * G/(H+l2)``. Features are standardized with training
statistics and bucketed into at most ``n_bins`` quantile bins before growth.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _tree_kernels as K

log = logging.getLogger(__name__)

MODEL_FORMAT = "pitchkin-gbdt"
MODEL_VERSION = 1
STD_FLOOR = 1e-12


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    rounds: int = 300
    max_depth: int = 12
    learning_rate: float = 0.1
    row_subsample: float = 0.8
    col_subsample: float = 0.8
    n_bins: int = 256
    min_child_hessian: float = 1.0
    l2_leaf_reg: float = 1.0
    min_split_gain: float = 0.0
    standardize: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        for name in ("row_subsample", "col_subsample"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in (0, 1]")
        if not 2 <= self.n_bins <= 256:
            raise ValueError("n_bins must be in [2, 256]")
        if self.max_depth < 0 or self.min_child_hessian <= 0 or self.l2_leaf_reg < 0:
            raise ValueError("invalid tree regularization settings")


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "StandardizationStats":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std < STD_FLOOR, 1.0, std)
        return cls(mean, std)

    @classmethod
    def identity(cls, n_features: int) -> "StandardizationStats":
        return cls(np.zeros(n_features), np.ones(n_features))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class Tree:
    """Flat node arrays; a node is a leaf when ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    gain: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):  # children always follow parents
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())


@dataclass
class GbdtModel:
    classes: list
    trees: list  # trees[round][class] -> Tree
    base_score: np.ndarray
    stats: StandardizationStats
    config: TrainConfig
    feature_names: list
    train_loss: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _flat(self):
        cached = getattr(self, "_flat_cache", None)
        if cached is not None and cached[0] == len(self.trees):
            return cached[1]
        flat = [t for rnd in self.trees for t in rnd]
        offsets = np.zeros(len(flat) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([t.n_nodes for t in flat])
        cat = lambda attr, dt: (np.concatenate([getattr(t, attr) for t in flat]).astype(dt)  # noqa: E731
                                if flat else np.zeros(0, dt))
        arrays = (offsets, cat("feature", np.int64), cat("threshold", float),
                  cat("left", np.int64), cat("right", np.int64), cat("value", float),
                  np.array([c for rnd in self.trees for c in range(len(rnd))], dtype=np.int64))
        self._flat_cache = (len(self.trees), arrays)
        return arrays

    def decision_function(self, X) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        Z = self.stats.transform(X)
        offsets, feat, thr, left, right, value, tree_class = self._flat()
        out = np.empty((Z.shape[0], len(self.classes)))
        K.predict_raw(offsets, feat, thr, left, right, value, tree_class,
                      np.ascontiguousarray(Z), self.base_score.astype(float), out)
        return out

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        # np.argmax returns the first maximum: ties go to the lower class ordinal
        idx = np.argmax(self.predict_proba(X), axis=1)
        return np.array(self.classes, dtype=object)[idx]

    def max_depth(self) -> int:
        return max((t.depth() for rnd in self.trees for t in rnd), default=0)

    def n_splits(self) -> int:
        return int(sum(np.count_nonzero(t.feature >= 0) for rnd in self.trees for t in rnd))


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    e = np.exp(Z - Z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(Z: np.ndarray, y_idx: np.ndarray) -> float:
    Z = Z - Z.max(axis=1, keepdims=True)
    logz = np.log(np.exp(Z).sum(axis=1))
    return float(np.mean(logz - Z[np.arange(Z.shape[0]), y_idx]))


def _as_matrix(X, n_features: Optional[int] = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise TrainingError("expected a 2-D feature matrix")
    if n_features is not None and X.shape[1] != n_features:
        raise TrainingError(f"expected {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise TrainingError("feature matrix contains NaN or Inf")
    return X


def bin_edges(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Split candidates for one feature: midpoints between distinct values.

    With more distinct values than bins, the candidates are thinned to the
    midpoints just below the empirical quantiles. Edges never coincide with a
    training value, so an affine rescaling of the column bins identically.
    """
    u = np.unique(column)
    if u.size <= 1:
        return np.zeros(0)
    mids = 0.5 * (u[:-1] + u[1:])
    if u.size <= n_bins:
        return mids
    s = np.sort(column)
    ranks = (np.arange(1, n_bins) * s.size) // n_bins
    pos = np.searchsorted(u, s[ranks])  # index of the quantile value in u
    pos = np.unique(pos[pos >= 1])
    return mids[pos - 1]


def build_bins(Z: np.ndarray, n_bins: int) -> tuple[np.ndarray, np.ndarray, list]:
    """Binned matrix (feature-major uint8), edge counts, per-feature edges."""
    n, F = Z.shape
    xb = np.empty((F, n), dtype=np.uint8)
    n_edges = np.zeros(F, dtype=np.int64)
    edges = []
    for f in range(F):
        e = bin_edges(Z[:, f], n_bins)
        edges.append(e)
        n_edges[f] = e.size
        xb[f] = np.searchsorted(e, Z[:, f], side="left")
    return xb, n_edges, edges


def fit(X, y, cfg: TrainConfig = TrainConfig(), classes: Optional[Sequence] = None,
        feature_names: Optional[Sequence[str]] = None) -> GbdtModel:
    X = _as_matrix(X)
    y = np.asarray(y, dtype=object)
    n, F = X.shape
    if n == 0 or y.shape[0] != n:
        raise TrainingError("empty input or label count mismatch")
    present = sorted(set(y.tolist()), key=str)
    if classes is None:
        classes = present
    classes = list(classes)
    lookup = {c: i for i, c in enumerate(classes)}
    unknown = set(present) - set(lookup)
    if unknown:
        raise TrainingError(f"labels outside class table: {sorted(map(str, unknown))}")
    if len(present) < 2:
        raise TrainingError("training data contains a single class")
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(F)]
    if len(names) != F:
        raise TrainingError("feature_names length mismatch")

    y_idx = np.array([lookup[v] for v in y], dtype=np.int64)
    n_classes = len(classes)
    stats = StandardizationStats.fit(X) if cfg.standardize else StandardizationStats.identity(F)
    Z = stats.transform(X)
    xb, n_edges, edges = build_bins(Z, cfg.n_bins)

    counts = np.bincount(y_idx, minlength=n_classes).astype(float)
    base = np.log(np.maximum(counts / n, 1e-12))
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y_idx] = 1.0
    scores = np.tile(base, (n, 1))

    rng = np.random.default_rng(cfg.seed)
    n_cols = max(1, int(round(cfg.col_subsample * F)))
    trees: list = []
    losses = [cross_entropy(scores, y_idx)]
    for rnd in range(cfg.rounds):
        p = softmax(scores)
        grad = p - onehot
        hess = np.maximum(p * (1.0 - p), 1e-16)
        if cfg.row_subsample < 1.0:
            rows = np.flatnonzero(rng.random(n) < cfg.row_subsample).astype(np.int64)
            if rows.size == 0:
                rows = np.arange(n, dtype=np.int64)
        else:
            rows = np.arange(n, dtype=np.int64)
        round_trees = []
        for c in range(n_classes):
            if n_cols < F:
                feats = np.sort(rng.choice(F, size=n_cols, replace=False)).astype(np.int64)
            else:
                feats = np.arange(F, dtype=np.int64)
            g = np.ascontiguousarray(grad[:, c])
            h = np.ascontiguousarray(hess[:, c])
            feat, sbin, left, right, gain, value = K.grow_tree(
                xb, rows, feats, g, h, n_edges, cfg.n_bins, cfg.max_depth,
                cfg.min_child_hessian, cfg.l2_leaf_reg, cfg.min_split_gain, cfg.learning_rate)
            thr = np.array([edges[f][b] if f >= 0 else 0.0 for f, b in zip(feat, sbin)])
            round_trees.append(Tree(feat.copy(), thr, left.copy(), right.copy(),
                                    gain.copy(), value.copy()))
            col = np.zeros(n)
            K.apply_binned(feat, sbin, left, right, value, xb, col)
            scores[:, c] += col
        trees.append(round_trees)
        losses.append(cross_entropy(scores, y_idx))
        if log.isEnabledFor(logging.DEBUG) and (rnd + 1) % 25 == 0:
            log.debug("round %d loss %.6f", rnd + 1, losses[-1])
    return GbdtModel(classes, trees, base, stats, cfg, names, losses)


def gain_importance(model: GbdtModel) -> np.ndarray:
    imp = np.zeros(model.n_features)
    for rnd in model.trees:
        for t in rnd:
            internal = t.feature >= 0
            np.add.at(imp, t.feature[internal], t.gain[internal])
    total = imp.sum()
    if total <= 0:
        raise TrainingError("model has no splits; importance undefined")
    return imp / total


# -- persistence ------------------------------------------------------------

def _tree_to_dict(t: Tree) -> dict:
    return {k: getattr(t, k).tolist() for k in ("feature", "threshold", "left", "right", "gain", "value")}


def _tree_from_dict(d: dict) -> Tree:
    ints = ("feature", "left", "right")
    return Tree(**{k: np.array(v, dtype=np.int64 if k in ints else float) for k, v in d.items()})


def model_to_dict(model: GbdtModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": asdict(model.config),
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "base_score": model.base_score.tolist(),
        "stats": {"mean": model.stats.mean.tolist(), "std": model.stats.std.tolist()},
        "train_loss": list(model.train_loss),
        "trees": [[_tree_to_dict(t) for t in rnd] for rnd in model.trees],
    }


def model_from_dict(d: dict) -> GbdtModel:
    if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model file: {d.get('format')} v{d.get('version')}")
    return GbdtModel(
        classes=list(d["classes"]),
        trees=[[_tree_from_dict(t) for t in rnd] for rnd in d["trees"]],
        base_score=np.array(d["base_score"], dtype=float),
        stats=StandardizationStats(np.array(d["stats"]["mean"], dtype=float),
                                   np.array(d["stats"]["std"], dtype=float)),
        config=TrainConfig(**d["config"]),
        feature_names=list(d["feature_names"]),
        train_loss=list(d.get("train_loss", [])),
    )


def save_model(model: GbdtModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> GbdtModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
