"""Softmax cross-entropy loss."""

import numpy as np

from hybridcnn.core.errors import LabelError, ShapeError
from hybridcnn.core.tensor import Tensor, apply_op


def softmax_cross_entropy(logits: Tensor, labels: Tensor | np.ndarray) -> Tensor:
    """
    Mean categorical cross-entropy over the batch.

    Computed through log-sum-exp; the fused gradient is (softmax - y) / N.

    Args:
        logits: `[N, K]` raw scores
        labels: one-hot `[N, K]`

    Raises:
        LabelError: If `labels` is not one-hot
    """
    y = labels.data if isinstance(labels, Tensor) else np.asarray(labels, dtype=logits.dtype)
    if y.shape != logits.shape or logits.ndim != 2:
        raise ShapeError(f"logits {logits.shape} and labels {y.shape} must both be [N, K]")
    if not (np.all((y == 0) | (y == 1)) and np.all(y.sum(axis=1) == 1)):
        raise LabelError("labels must be one-hot rows")

    z = logits.data
    n = z.shape[0]
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    loss = np.asarray(-(y * log_probs).sum() / n, dtype=z.dtype)
    probs = np.exp(log_probs)

    return apply_op("softmax_cross_entropy", loss, (logits,), lambda g: (g * (probs - y) / n,))
