"""Probabilistic classifiers over time bins.

The drift explanation needs calibrated-ish posteriors P(bin | x), not hard
labels. Two deliberately simple models are provided:

- k nearest neighbours: posterior is the raw bin-frequency vector among
  the k nearest training points; no smoothing. Distance ties resolve to
  the lower sample index so results are order-deterministic.
- random forest: bagged axis-aligned trees, Gini splits on sqrt(d) random
  feature subsets; posterior is the mean of the per-tree leaf frequency
  vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import pairwise_sqdist
from .core import Dataset, identifiability_rows
from .errors import UnsupportedConfigError, ValidationError

_PREDICT_CHUNK = 512


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    distance: str = "sqeuclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.distance not in ("sqeuclidean", "euclidean"):
            raise ValidationError(f"unknown distance {self.distance!r}")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 10
    max_depth: int | None = None
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1 when set")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")


def _check_training_data(data: Dataset) -> None:
    if data.n_bins < 2:
        raise UnsupportedConfigError("training needs at least 2 time bins")


def _check_queries(x, dim: int) -> np.ndarray:
    q = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != dim:
        raise ValidationError(f"queries must have {dim} features")
    if not np.isfinite(q).all():
        raise ValidationError("queries contain non-finite values")
    return q


class KnnTimeClassifier:
    """Frequency-posterior k-NN over time bins."""

    def __init__(self, data: Dataset, config: KnnConfig):
        _check_training_data(data)
        if config.k > len(data):
            raise ValidationError(f"k={config.k} exceeds the {len(data)} training samples")
        self.config = config
        self.n_bins = data.n_bins
        self.dim = data.dim
        self._x = data.x
        self._t = data.t

    def predict_posterior(self, x) -> np.ndarray:
        q = _check_queries(x, self.dim)
        k = self.config.k
        out = np.empty((q.shape[0], self.n_bins))
        for lo in range(0, q.shape[0], _PREDICT_CHUNK):
            chunk = q[lo : lo + _PREDICT_CHUNK]
            d2 = pairwise_sqdist(chunk, self._x)
            # partition instead of a full sort; the posterior only needs the
            # set of k nearest, not their order
            nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
            rows = np.arange(chunk.shape[0])
            kth = d2[rows[:, None], nearest].max(axis=1)
            # ties across the k boundary must resolve in index order
            for r in np.nonzero((d2 <= kth[:, None]).sum(axis=1) > k)[0]:
                nearest[r] = np.argsort(d2[r], kind="stable")[:k]
            bins = self._t[nearest]
            for b in range(self.n_bins):
                out[lo : lo + chunk.shape[0], b] = (bins == b + 1).sum(axis=1)
        out /= k
        return out


class _Tree:
    """Flat-array decision tree; feature < 0 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "probs")

    def __init__(self, feature, threshold, left, right, probs):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.probs = np.asarray(probs, dtype=np.float64)

    def predict(self, q: np.ndarray) -> np.ndarray:
        node = np.zeros(q.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.nonzero(internal)[0]
            cur = node[rows]
            go_left = q[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return self.probs[node]


def _grow_tree(
    x: np.ndarray,
    t: np.ndarray,
    n_bins: int,
    config: ForestConfig,
    rng: np.random.Generator,
) -> _Tree:
    n, d = x.shape
    n_try = max(1, int(np.sqrt(d)))
    feature, threshold, left, right, probs = [], [], [], [], []

    def best_split(indices):
        tried = rng.choice(d, size=n_try, replace=False)
        best = None  # (score, feature, threshold)
        for f in tried:
            vals = x[indices, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            st = t[indices][order]
            onehot = np.zeros((indices.size, n_bins))
            onehot[np.arange(indices.size), st - 1] = 1.0
            cum = np.cumsum(onehot, axis=0)
            n_left = np.arange(1, indices.size)
            n_right = indices.size - n_left
            valid = (sv[1:] > sv[:-1]) & (n_left >= config.min_leaf) & (n_right >= config.min_leaf)
            if not valid.any():
                continue
            cl = cum[:-1]
            cr = cum[-1] - cl
            gini_l = 1.0 - ((cl / n_left[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((cr / n_right[:, None]) ** 2).sum(axis=1)
            score = (n_left * gini_l + n_right * gini_r) / indices.size
            score[~valid] = np.inf
            pos = int(np.argmin(score))
            if best is None or score[pos] < best[0]:
                best = (score[pos], int(f), 0.5 * (sv[pos] + sv[pos + 1]))
        return best

    # explicit stack; parent links are patched once a child id exists
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        indices, depth, parent, is_right = stack.pop()
        counts = np.bincount(t[indices], minlength=n_bins + 1)[1:]
        split = None
        if (
            (counts > 0).sum() >= 2
            and indices.size >= 2 * config.min_leaf
            and (config.max_depth is None or depth < config.max_depth)
        ):
            split = best_split(indices)
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            probs.append(counts / counts.sum())
            continue
        _, f, thr = split
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        probs.append(np.zeros(n_bins))
        mask = x[indices, f] <= thr
        stack.append((indices[~mask], depth + 1, node, True))
        stack.append((indices[mask], depth + 1, node, False))
    return _Tree(feature, threshold, left, right, probs)


class ForestTimeClassifier:
    """Bagged Gini trees; posterior averages the per-tree leaf frequencies."""

    def __init__(self, data: Dataset, config: ForestConfig):
        _check_training_data(data)
        self.config = config
        self.n_bins = data.n_bins
        self.dim = data.dim
        n = len(data)
        seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)
        self.trees: list[_Tree] = []
        for ss in seeds:
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, n, size=n)
            self.trees.append(_grow_tree(data.x[boot], data.t[boot], data.n_bins, config, rng))

    def predict_tree_posteriors(self, x) -> np.ndarray:
        """Per-tree posteriors, shape (n_trees, n_queries, n_bins)."""
        q = _check_queries(x, self.dim)
        return np.stack([tree.predict(q) for tree in self.trees])

    def predict_posterior(self, x) -> np.ndarray:
        return self.predict_tree_posteriors(x).mean(axis=0)


def fit_knn(data: Dataset, config: KnnConfig | None = None) -> KnnTimeClassifier:
    return KnnTimeClassifier(data, config or KnnConfig())


def fit_forest(data: Dataset, config: ForestConfig | None = None) -> ForestTimeClassifier:
    return ForestTimeClassifier(data, config or ForestConfig())


def predict_posterior(classifier, x) -> np.ndarray:
    """Posterior over bins for one query vector."""
    q = np.asarray(x, dtype=np.float64)
    if q.ndim != 1:
        raise ValidationError("predict_posterior takes a single feature vector")
    return classifier.predict_posterior(q[None, :])[0]


def estimate_identifiability(classifier, x) -> np.ndarray:
    """Identifiability of each query under the classifier's posterior."""
    return identifiability_rows(classifier.predict_posterior(x))


def identifiability_mse(estimated, truth) -> float:
    """Mean squared error between estimated and true identifiability."""
    est = np.asarray(estimated, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    if est.shape != tru.shape or est.ndim != 1 or est.size == 0:
        raise ValidationError("estimated and true values must be equal-length 1-d arrays")
    return float(np.mean((est - tru) ** 2))
