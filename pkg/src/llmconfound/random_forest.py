"""Binary-classification Random Forest built from CART trees.

Trees split on Gini impurity at midpoints between consecutive distinct
feature values, draw a fresh feature subset at every node, and are grown on
bootstrap resamples. The forest's probability is the mean leaf
positive-fraction over trees.

Every tree draws from its own random stream, derived from
``(seed, tree_index)`` alone, so results do not depend on the order in
which trees are built or on how many threads build them.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

# impurities closer than this are treated as tied
IMPURITY_TOL = 1e-12

_TREE_STREAM = 0x7EE


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    mtry: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolve_mtry(self, p: int) -> int:
        """floor(sqrt(p)) by default, capped at p."""
        if self.mtry is None:
            return max(1, math.isqrt(p))
        if self.mtry > p:
            raise ValueError(f"mtry={self.mtry} exceeds feature count {p}")
        return self.mtry


@dataclass(frozen=True, slots=True)
class Leaf:
    positive_fraction: float
    sample_count: int


@dataclass(frozen=True, slots=True)
class Internal:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    weighted_impurity: float


def gini(labels) -> float:
    """Gini impurity of a binary label multiset."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("gini of an empty label set is undefined")
    q = float(np.count_nonzero(labels)) / labels.size
    return 1.0 - q * q - (1.0 - q) * (1.0 - q)


def _midpoint(a: float, b: float) -> float:
    mid = a + (b - a) / 2.0
    # adjacent floats: keep a so that a routes left and b right
    return a if mid >= b else mid


def best_split(X, y, feature_subset, min_samples_leaf: int = 1) -> Split | None:
    """Lowest child-size-weighted Gini split over ``feature_subset``.

    Returns ``None`` when the node is pure or no candidate leaves both
    children with at least ``min_samples_leaf`` samples. Ties go to the lower
    feature index, then the lower threshold.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = y.shape[0]
    pos = int(np.count_nonzero(y))
    if n < 2 or pos == 0 or pos == n:
        return None
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    leaf_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)

    best = None
    for f in sorted(int(f) for f in feature_subset):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        pos_left = np.cumsum(y[order] != 0)[:-1].astype(float)
        valid = (xs[:-1] < xs[1:]) & leaf_ok
        if not valid.any():
            continue
        pos_right = pos - pos_left
        # n_child * gini(child) == 2 * pos * neg / n_child
        weighted = (
            2.0 * pos_left * (n_left - pos_left) / n_left + 2.0 * pos_right * (n_right - pos_right) / n_right
        ) / n
        weighted[~valid] = np.inf
        lowest = weighted.min()
        i = int(np.flatnonzero(weighted <= lowest + IMPURITY_TOL)[0])
        if best is None or weighted[i] < best.weighted_impurity - IMPURITY_TOL:
            best = Split(f, _midpoint(float(xs[i]), float(xs[i + 1])), float(weighted[i]))
    return best


def grow_tree(X, y, params: ForestParams, rng: np.random.Generator, depth: int = 0) -> TreeNode:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    p = X.shape[1]
    mtry = params.resolve_mtry(p)
    return _grow(X, y, np.arange(y.shape[0]), params, mtry, rng, depth)


def _grow(X, y, idx, params, mtry, rng, depth):
    n = idx.shape[0]
    pos = int(np.count_nonzero(y[idx]))
    if (
        pos == 0
        or pos == n
        or (params.max_depth is not None and depth >= params.max_depth)
        or n < params.min_samples_split
    ):
        return Leaf(pos / n, n)
    features = rng.choice(X.shape[1], size=mtry, replace=False)
    split = best_split(X[idx], y[idx], features, params.min_samples_leaf)
    if split is None:
        return Leaf(pos / n, n)
    go_left = X[idx, split.feature_index] <= split.threshold
    return Internal(
        split.feature_index,
        split.threshold,
        _grow(X, y, idx[go_left], params, mtry, rng, depth + 1),
        _grow(X, y, idx[~go_left], params, mtry, rng, depth + 1),
    )


def tree_stream(seed: int, tree_index: int) -> np.random.Generator:
    """Independent generator for one tree, a pure function of its arguments."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_TREE_STREAM, tree_index)))


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, size=n)


@dataclass(frozen=True)
class Forest:
    params: ForestParams
    trees: tuple
    p: int

    def predict_proba(self, X):
        return predict_proba(self, X)

    def predict(self, X, threshold: float = 0.5):
        return predict(self, X, threshold)

    def to_dict(self) -> dict:
        return {"params": asdict(self.params), "p": self.p, "trees": [_node_to_dict(t) for t in self.trees]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(ForestParams(**d["params"]), tuple(_node_from_dict(t) for t in d["trees"]), int(d["p"]))

    @classmethod
    def from_json(cls, text: str) -> "Forest":
        return cls.from_dict(json.loads(text))


def _node_to_dict(node):
    if isinstance(node, Leaf):
        return {"positive_fraction": node.positive_fraction, "sample_count": node.sample_count}
    return {
        "feature_index": node.feature_index,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d):
    if "positive_fraction" in d:
        return Leaf(float(d["positive_fraction"]), int(d["sample_count"]))
    return Internal(int(d["feature_index"]), float(d["threshold"]), _node_from_dict(d["left"]), _node_from_dict(d["right"]))


def _fit_tree(X, y, params, mtry, t):
    rng = tree_stream(params.seed, t)
    rows = bootstrap_indices(y.shape[0], rng)
    return _grow(X[rows], y[rows], np.arange(rows.shape[0]), params, mtry, rng, 0)


def fit(X, y=None, params: ForestParams | None = None, n_jobs: int = 1) -> Forest:
    """Train a forest.

    ``X`` may be a ``FeatureMatrix``, in which case its labels are used.
    The result is a pure function of ``(X, y, params)``; ``n_jobs`` only
    changes how many threads grow trees.
    """
    if y is None and hasattr(X, "rows"):
        X, y = X.rows, X.labels
    params = params or ForestParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("training matrix must be non-empty and 2-D")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y have different numbers of rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("training matrix contains non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary 0/1")
    pos = int(y.sum())
    if pos == 0 or pos == y.shape[0]:
        raise ValueError("training labels contain a single class; both classes are required")
    mtry = params.resolve_mtry(X.shape[1])
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda t: _fit_tree(X, y, params, mtry, t), range(params.n_trees)))
    else:
        trees = [_fit_tree(X, y, params, mtry, t) for t in range(params.n_trees)]
    return Forest(params, tuple(trees), X.shape[1])


def _route(node, X, idx, out):
    if isinstance(node, Leaf):
        out[idx] += node.positive_fraction
        return
    left = X[idx, node.feature_index] <= node.threshold
    _route(node.left, X, idx[left], out)
    _route(node.right, X, idx[~left], out)


def tree_proba(node: TreeNode, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros(X.shape[0])
    _route(node, X, np.arange(X.shape[0]), out)
    return out


def predict_proba(forest: Forest, X):
    """Mean leaf positive-fraction over trees; a float for a single row."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != forest.p:
        raise ValueError(f"expected {forest.p} features, got {X2.shape[1]}")
    if not np.all(np.isfinite(X2)):
        raise ValueError("prediction rows must be finite")
    total = np.zeros(X2.shape[0])
    for tree in forest.trees:
        total += tree_proba(tree, X2)
    proba = np.clip(total / len(forest.trees), 0.0, 1.0)
    return float(proba[0]) if single else proba


def predict(forest: Forest, X, threshold: float = 0.5):
    """Positive iff probability is strictly greater than ``threshold``."""
    proba = predict_proba(forest, X)
    if np.ndim(proba) == 0:
        return int(proba > threshold)
    return (proba > threshold).astype(np.int64)
