"""Shared validation for the downstream classifiers."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from hybridcnn.core.errors import LabelError, NotFittedError, ShapeError


class BinaryClassifier(ClassifierMixin, BaseEstimator):
    """
    Base for 0/1 classifiers on dense feature matrices.

    Subclasses implement `fit`, `predict_proba`, `to_tensors` and
    `from_tensors`; `kind` names the model in checkpoint sidecars.
    """

    kind: str = ""

    @staticmethod
    def _check_X(X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ShapeError(f"expected a 2-D feature matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ShapeError("feature matrix contains NaN or Inf")
        return X

    def _check_Xy(self, X, y) -> tuple[np.ndarray, np.ndarray]:
        X = self._check_X(X)
        y = np.asarray(y).astype(np.int64)
        if y.shape != (X.shape[0],):
            raise ShapeError(f"labels {y.shape} do not match {X.shape[0]} rows")
        if not np.isin(y, (0, 1)).all():
            raise LabelError("labels must be 0 (normal) or 1 (abnormal)")
        if np.unique(y).size < 2:
            raise LabelError(f"training rows hold a single class ({int(y[0]) if y.size else 'none'})")
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return X, y

    def _require_fitted(self) -> None:
        if not hasattr(self, "n_features_in_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def _check_fitted(self, X) -> np.ndarray:
        self._require_fitted()
        X = self._check_X(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        """Class with the highest probability (class 0 on exact ties)."""
        return np.argmax(self.predict_proba(X), axis=1).astype(np.int64)

    def to_tensors(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def from_tensors(self, arrays: dict[str, np.ndarray]) -> "BinaryClassifier":
        raise NotImplementedError
