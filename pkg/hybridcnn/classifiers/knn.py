"""Brute-force k-nearest-neighbour classifier."""

import numpy as np

from hybridcnn.classifiers.base import BinaryClassifier
from hybridcnn.core.errors import ConfigError

# bytes allowed for one chunk of float64 query-train differences
MEMORY_BUDGET = 64 * 2**20


def chunk_rows(n_train: int, n_features: int, budget: int = MEMORY_BUDGET) -> int:
    """Query rows per chunk so that `rows x n_train x n_features` float64 values fit `budget`."""
    return max(1, budget // max(1, n_train * n_features * 8))


class KNeighborsClassifier(BinaryClassifier):
    """
    Majority vote of the k training rows closest in Euclidean distance.

    Distance ties are broken by the lower training index; the probability
    of class 1 is its vote fraction.
    """

    kind = "knn"

    def __init__(self, n_neighbors: int = 5):
        self.n_neighbors = n_neighbors

    def fit(self, X, y) -> "KNeighborsClassifier":
        X, y = self._check_Xy(X, y)
        if self.n_neighbors > len(X):
            raise ConfigError(f"k={self.n_neighbors} exceeds the {len(X)} training rows")
        self.X_, self.y_ = X, y
        return self

    def kneighbors(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Squared distances and training indices of the k nearest rows, nearest first."""
        X = self._check_fitted(X)
        dists, idx = [], []
        step = chunk_rows(*self.X_.shape)
        for start in range(0, len(X), step):
            diff = X[start:start + step, None, :] - self.X_[None, :, :]
            sq = (diff * diff).sum(axis=-1)
            order = np.argsort(sq, axis=1, kind="stable")[:, : self.n_neighbors]
            idx.append(order)
            dists.append(np.take_along_axis(sq, order, axis=1))
        return np.concatenate(dists), np.concatenate(idx)

    def predict_proba(self, X) -> np.ndarray:
        _, idx = self.kneighbors(X)
        positive = self.y_[idx].mean(axis=1)
        return np.stack([1.0 - positive, positive], axis=1)

    def to_tensors(self) -> dict[str, np.ndarray]:
        self._require_fitted()
        return {"X": self.X_, "y": self.y_.astype(np.float64)}

    def from_tensors(self, arrays: dict[str, np.ndarray]) -> "KNeighborsClassifier":
        self.X_ = arrays["X"]
        self.y_ = arrays["y"].astype(np.int64)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = self.X_.shape[1]
        return self
