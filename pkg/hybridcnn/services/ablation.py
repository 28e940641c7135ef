"""Ablation grid: train and evaluate every reference toggle row."""

import logging

from hybridcnn.data.dataset import LabeledDataset
from hybridcnn.models.hybrid import HybridModelConfig
from hybridcnn.models.report import EvalReport
from hybridcnn.models.training import TrainConfig
from hybridcnn.network.accounting import ABLATION_ROWS, AblationRow
from hybridcnn.network.hybrid import HybridCNN
from hybridcnn.services.evaluator import evaluate
from hybridcnn.services.trainer import train

logger = logging.getLogger(__name__)


def run_ablation(
    train_set: LabeledDataset,
    test_set: LabeledDataset,
    train_cfg: TrainConfig,
    base_config: HybridModelConfig,
    rows: tuple[AblationRow, ...] = ABLATION_ROWS,
) -> list[EvalReport]:
    """
    Train one model per toggle row at `base_config`'s widths and input size.

    Returns:
        One EvalReport per row, labelled with the row name and carrying its
        training curves
    """
    reports = []
    for row in rows:
        config = row.apply(base_config)
        logger.info(f"🧠 Ablation row {row.label}")
        result = train(HybridCNN(config), train_set, train_cfg.model_copy(update={"checkpoint_path": None}))
        report = evaluate(result.model, test_set, train_cfg.batch_size)
        report.curves = result.curves
        report.label = row.label
        reports.append(report)
    return reports
