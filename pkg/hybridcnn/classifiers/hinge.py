"""Linear separator trained by SGD on the L2-regularized hinge loss."""

import logging

import numpy as np
from sklearn.linear_model import SGDClassifier

from hybridcnn.classifiers.base import BinaryClassifier
from hybridcnn.core.errors import NonFiniteError

logger = logging.getLogger(__name__)


class LinearHingeClassifier(BinaryClassifier):
    """
    Minimizes `alpha/2 |w|^2 + mean(max(0, 1 - s (w.x + b)))`, s = 2y - 1,
    with scikit-learn's per-sample SGD at a constant learning rate for a
    fixed number of epochs.

    The score is the signed margin `w.x + b`; probabilities pass it through
    the logistic function and are only meant for ROC analysis.
    """

    kind = "hinge"

    def __init__(self, alpha: float = 1e-4, learning_rate: float = 0.01, epochs: int = 1000, random_state: int = 42):
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.random_state = random_state

    def fit(self, X, y) -> "LinearHingeClassifier":
        X, y = self._check_Xy(X, y)
        sgd = SGDClassifier(
            loss="hinge",
            penalty="l2",
            alpha=self.alpha,
            learning_rate="constant",
            eta0=self.learning_rate,
            max_iter=self.epochs,
            tol=None,
            random_state=self.random_state,
        )
        try:
            sgd.fit(X, y)
        except ValueError as e:
            raise NonFiniteError("hinge_sgd", str(e)) from e
        w, b = sgd.coef_[0].astype(np.float64), float(sgd.intercept_[0])
        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise NonFiniteError("hinge_sgd", "weights diverged")
        self.coef_, self.intercept_ = w, float(b)
        logger.info(f"📈 Hinge model fitted: |w|={np.linalg.norm(w):.4f} b={b:.4f}")
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        margin = self.decision_function(X)
        positive = np.exp(-np.logaddexp(0.0, -margin))
        return np.stack([1.0 - positive, positive], axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0).astype(np.int64)

    def to_tensors(self) -> dict[str, np.ndarray]:
        self._require_fitted()
        return {"coef": self.coef_, "intercept": np.array([self.intercept_])}

    def from_tensors(self, arrays: dict[str, np.ndarray]) -> "LinearHingeClassifier":
        self.coef_ = arrays["coef"]
        self.intercept_ = float(arrays["intercept"][0])
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = self.coef_.shape[0]
        return self
