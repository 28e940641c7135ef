"""Binary classification metrics (abnormal = 1 is the positive class)."""

import logging
from collections.abc import Sequence

import numpy as np
from sklearn import metrics as skm

from hybridcnn.models.report import EvalReport, RocPoint

logger = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5
CLASSES = [0, 1]


def confusion_matrix(labels: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    """`[[TN, FP], [FN, TP]]` as int64."""
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.shape != predictions.shape:
        raise ValueError(f"labels {labels.shape} and predictions {predictions.shape} differ")
    return skm.confusion_matrix(labels, predictions, labels=CLASSES).astype(np.int64)


def classification_scores(labels: np.ndarray, predictions: np.ndarray) -> dict[str, float]:
    """
    Accuracy, precision, recall, F1 and Cohen's kappa.

    Precision (recall) is 0 when nothing is predicted (present) positive;
    kappa is 1 for perfect agreement on a single class.
    """
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.shape != predictions.shape:
        raise ValueError(f"labels {labels.shape} and predictions {predictions.shape} differ")
    if labels.size == 0:
        return {"accuracy": 0.0, "precision": 0.0, "recall": 0.0, "f1": 0.0, "kappa": 0.0}
    accuracy = skm.accuracy_score(labels, predictions)
    precision, recall, f1, _ = skm.precision_recall_fscore_support(
        labels, predictions, pos_label=1, average="binary", zero_division=0,
    )
    if np.unique(np.r_[labels, predictions]).size == 1:
        # chance agreement is total: the kappa ratio is 0/0
        kappa = 1.0
    else:
        kappa = skm.cohen_kappa_score(labels, predictions, labels=CLASSES)
    return {
        "accuracy": float(accuracy),
        "precision": float(precision),
        "recall": float(recall),
        "f1": float(f1),
        "kappa": float(kappa),
    }


# ==================== ROC ====================

def _single_class(labels: np.ndarray) -> bool:
    return labels.size == 0 or labels.min() == labels.max()


def roc_curve(labels: np.ndarray, scores: np.ndarray) -> list[RocPoint]:
    """
    ROC points, one per distinct score, from (0, 0) to (1, 1).

    The first point's threshold lies above every score. Tied scores form a
    single step, so the trapezoid gives ties half credit. Empty when only
    one class is present.
    """
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if _single_class(labels):
        return []
    fpr, tpr, thresholds = skm.roc_curve(labels, scores, pos_label=1, drop_intermediate=False)
    thresholds = np.where(np.isfinite(thresholds), thresholds, scores.max() + 1.0)
    return [RocPoint(fpr=float(f), tpr=float(t), threshold=float(th)) for f, t, th in zip(fpr, tpr, thresholds)]


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float | None:
    """Trapezoidal area under the ROC curve; None when only one class is present."""
    labels = np.asarray(labels, dtype=np.int64)
    if _single_class(labels):
        return None
    fpr, tpr, _ = skm.roc_curve(labels, np.asarray(scores, dtype=np.float64), pos_label=1, drop_intermediate=False)
    return float(skm.auc(fpr, tpr))


def rank_auc(labels: np.ndarray, scores: np.ndarray) -> float | None:
    """(#concordant pairs + 0.5 * #tied pairs) / (n_pos * n_neg)."""
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        return None
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / (pos.size * neg.size))


# ==================== REPORTS ====================

def evaluate_scores(labels: np.ndarray, scores: np.ndarray, predictions: np.ndarray | None = None) -> EvalReport:
    """
    Build an EvalReport from abnormal-class scores.

    Args:
        labels: 0/1 ground truth
        scores: Abnormal-class probability (or any monotone score)
        predictions: Hard labels; defaults to ``scores >= 0.5``
    """
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if predictions is None:
        predictions = (scores >= DECISION_THRESHOLD).astype(np.int64)
    cm = confusion_matrix(labels, predictions)
    auc = roc_auc(labels, scores)
    if auc is None:
        logger.warning("⚠️ Single-class evaluation set: ROC AUC is undefined")
    return EvalReport(
        confusion=cm.tolist(),
        roc_auc=auc,
        roc=roc_curve(labels, scores),
        n_samples=int(labels.size),
        **classification_scores(labels, predictions),
    )


def mean_report(reports: Sequence[EvalReport]) -> EvalReport:
    """
    Aggregate per-fold reports: metrics averaged, confusion matrices summed.

    AUC is the mean over the folds where it is defined (None if none is).
    """
    if not reports:
        raise ValueError("mean_report needs at least one report")
    aucs = [r.roc_auc for r in reports if r.roc_auc is not None]
    confusion = np.sum([np.array(r.confusion) for r in reports], axis=0)
    return EvalReport(
        confusion=confusion.tolist(),
        accuracy=float(np.mean([r.accuracy for r in reports])),
        precision=float(np.mean([r.precision for r in reports])),
        recall=float(np.mean([r.recall for r in reports])),
        f1=float(np.mean([r.f1 for r in reports])),
        kappa=float(np.mean([r.kappa for r in reports])),
        roc_auc=float(np.mean(aucs)) if aucs else None,
        n_samples=int(sum(r.n_samples for r in reports)),
    )
