"""Random forest of Gini decision trees."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from hybridcnn.classifiers.base import BinaryClassifier
from hybridcnn.core.errors import ConfigError
from hybridcnn.core.rng import Rng

logger = logging.getLogger(__name__)

LEAF = -1


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of class-count rows `[..., 2]`."""
    totals = counts.sum(axis=-1, keepdims=True)
    p = counts / np.where(totals > 0, totals, 1)
    return 1.0 - (p * p).sum(axis=-1)


def best_split(X: np.ndarray, y: np.ndarray, max_features: int, rng: Rng) -> tuple[int, float] | None:
    """
    Gini-greedy axis-aligned split of one node.

    Features are visited in random order; constant features are skipped
    without counting toward `max_features`, so a split is found whenever any
    feature varies. Returns (feature, threshold) or None.
    """
    n, d = X.shape
    best_score, best = np.inf, None
    examined = 0
    for feature in rng.permutation(d):
        order = np.argsort(X[:, feature], kind="stable")
        xs = X[order, feature]
        if xs[0] == xs[-1]:
            continue
        ys = y[order]
        left_pos = np.cumsum(ys)[:-1]
        left_n = np.arange(1, n)
        left = np.stack([left_n - left_pos, left_pos], axis=1)
        right = np.array([n - ys.sum(), ys.sum()]) - left
        score = (left_n * gini(left) + (n - left_n) * gini(right)) / n
        score = np.where(xs[1:] > xs[:-1], score, np.inf)
        i = int(np.argmin(score))
        if score[i] < best_score:
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best_score, best = score[i], (int(feature), float(threshold))
        examined += 1
        if examined >= max_features:
            break
    return best


@dataclass
class DecisionTree:
    """Array-backed binary tree; `value` holds the class fractions of each node."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def grow(cls, X: np.ndarray, y: np.ndarray, max_features: int, max_depth: int | None, rng: Rng) -> "DecisionTree":
        feature, threshold, left, right, value = [], [], [], [], []
        stack = [(np.arange(len(y)), 0, -1, False)]
        while stack:
            idx, depth, parent, is_right = stack.pop()
            node = len(feature)
            if parent >= 0:
                (right if is_right else left)[parent] = node
            counts = np.bincount(y[idx], minlength=2)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(counts / counts.sum())

            if counts.max() == len(idx) or (max_depth is not None and depth >= max_depth):
                continue
            split = best_split(X[idx], y[idx], max_features, rng)
            if split is None:
                continue
            f, t = split
            feature[node], threshold[node] = f, t
            goes_left = X[idx, f] <= t
            stack.append((idx[~goes_left], depth + 1, node, True))
            stack.append((idx[goes_left], depth + 1, node, False))

        return cls(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            value=np.array(value, dtype=np.float64),
        )

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        nodes = np.zeros(len(X), dtype=np.int64)
        active = self.feature[nodes] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = nodes[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            nodes[rows] = np.where(go_left, self.left[current], self.right[current])
            active[rows] = self.feature[nodes[rows]] != LEAF
        return nodes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    @property
    def node_count(self) -> int:
        return len(self.feature)


class RandomForestClassifier(BinaryClassifier):
    """
    Bagged Gini trees with per-split feature sampling.

    Probabilities are the mean class fractions of the leaves reached in every
    tree, so each row sums to 1. Tree i draws its bootstrap and feature
    orders from the i-th child of `SeedSequence(random_state)`, so the forest
    does not depend on `n_jobs`.

    Args:
        n_estimators: Number of trees
        max_features: ``"sqrt"`` (floor of sqrt(n_features)) or a count
        max_depth: None grows until leaves are pure or unsplittable
        bootstrap: Sample rows with replacement per tree
        random_state: Master seed
        n_jobs: Trees fitted concurrently
    """

    kind = "rf"

    def __init__(
        self,
        n_estimators: int = 100,
        max_features: str | int = "sqrt",
        max_depth: int | None = None,
        bootstrap: bool = True,
        random_state: int = 42,
        n_jobs: int = 1,
    ):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _features_per_split(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.floor(np.sqrt(d))))
        if isinstance(self.max_features, int) and 0 < self.max_features <= d:
            return self.max_features
        raise ConfigError(f"invalid max_features={self.max_features!r} for {d} features")

    def fit(self, X, y) -> "RandomForestClassifier":
        X, y = self._check_Xy(X, y)
        n, d = X.shape
        k = self._features_per_split(d)
        streams = Rng(self.random_state).spawn(self.n_estimators)

        def _fit_tree(rng: Rng) -> DecisionTree:
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            return DecisionTree.grow(X[rows], y[rows], k, self.max_depth, rng)

        progress = dict(total=self.n_estimators, desc="trees", unit="tree", leave=False)
        if self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                self.estimators_ = list(tqdm(pool.map(_fit_tree, streams), **progress))
        else:
            self.estimators_ = [_fit_tree(rng) for rng in tqdm(streams, **progress)]
        logger.info(f"🌲 Fitted {self.n_estimators} trees on {n} rows x {d} features ({k} per split)")
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        return np.mean([tree.predict_proba(X) for tree in self.estimators_], axis=0)

    def to_tensors(self) -> dict[str, np.ndarray]:
        self._require_fitted()
        arrays = {"n_features_in": np.array([self.n_features_in_], dtype=np.float64)}
        for i, tree in enumerate(self.estimators_):
            for field in ("feature", "threshold", "left", "right", "value"):
                arrays[f"tree{i:03d}.{field}"] = getattr(tree, field).astype(np.float64)
        return arrays

    def from_tensors(self, arrays: dict[str, np.ndarray]) -> "RandomForestClassifier":
        self.n_features_in_ = int(arrays["n_features_in"][0])
        self.classes_ = np.array([0, 1])
        self.estimators_ = []
        for i in range(self.n_estimators):
            prefix = f"tree{i:03d}"
            self.estimators_.append(DecisionTree(
                feature=arrays[f"{prefix}.feature"].astype(np.int64),
                threshold=arrays[f"{prefix}.threshold"],
                left=arrays[f"{prefix}.left"].astype(np.int64),
                right=arrays[f"{prefix}.right"].astype(np.int64),
                value=arrays[f"{prefix}.value"],
            ))
        return self
