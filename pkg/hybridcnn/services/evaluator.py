"""Model evaluation."""

import logging

import numpy as np

from hybridcnn.core.errors import DatasetError
from hybridcnn.core.tensor import no_record
from hybridcnn.data.dataset import LabeledDataset
from hybridcnn.data.splitting import batch_indices
from hybridcnn.models.report import EvalReport
from hybridcnn.network.accounting import count_params_and_flops
from hybridcnn.network.hybrid import HybridCNN
from hybridcnn.nn import softmax, softmax_cross_entropy
from hybridcnn.services.metrics import evaluate_scores

logger = logging.getLogger(__name__)


def predict_dataset(model: HybridCNN, dataset: LabeledDataset, batch_size: int = 16) -> tuple[np.ndarray, float]:
    """
    Eval-mode softmax probabilities `[N, 2]` and mean cross-entropy.

    Batches are visited in dataset order and the loss is reduced in that
    order, so results are reproducible bit for bit.
    """
    if len(dataset) == 0:
        raise DatasetError("cannot evaluate an empty dataset")
    probs, total = [], 0.0
    with no_record():
        for idx in batch_indices(len(dataset), batch_size, shuffle=False):
            images, onehot = dataset.stack(idx)
            logits, _ = model.forward(images, mode="eval")
            total += softmax_cross_entropy(logits, onehot).item() * len(idx)
            probs.append(softmax(logits).data.astype(np.float64))
    return np.concatenate(probs), total / len(dataset)


def evaluate(model: HybridCNN, dataset: LabeledDataset, batch_size: int = 16) -> EvalReport:
    """
    Confusion matrix at 0.5 on the abnormal probability, AC/PR/RE/F1,
    trapezoidal ROC AUC, Cohen's kappa and the model's analytic cost.
    """
    probs, _ = predict_dataset(model, dataset, batch_size)
    report = evaluate_scores(dataset.labels(), probs[:, 1])
    cost = count_params_and_flops(model.config)
    report.param_count = cost.param_count
    report.flop_count = cost.flop_count
    report.data_source = dataset.root
    logger.info(f"📊 Evaluated {len(dataset)} items: AC={report.accuracy:.4f} F1={report.f1:.4f} kappa={report.kappa:.4f}")
    return report
