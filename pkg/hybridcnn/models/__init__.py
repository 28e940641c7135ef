"""Pydantic schemas: configurations, reports and dataset records."""

from hybridcnn.models.dataset import AugmentationConfig, SplitSpec
from hybridcnn.models.downstream import ForestConfig, HingeConfig, KnnConfig
from hybridcnn.models.hybrid import BRANCHES, HEAD_WIDTHS, HybridModelConfig, ModelCost
from hybridcnn.models.report import (
    EXCLUDED_CLASSIFIERS,
    DownstreamReport,
    EvalReport,
    GradcheckEntry,
    GradcheckReport,
    RocPoint,
)
from hybridcnn.models.training import EpochRecord, TrainConfig

__all__ = [
    # Architecture
    "BRANCHES",
    "HEAD_WIDTHS",
    "HybridModelConfig",
    "ModelCost",
    # Data
    "SplitSpec",
    "AugmentationConfig",
    # Training
    "TrainConfig",
    "EpochRecord",
    # Reports
    "EvalReport",
    "RocPoint",
    "DownstreamReport",
    "EXCLUDED_CLASSIFIERS",
    "GradcheckEntry",
    "GradcheckReport",
    # Downstream
    "ForestConfig",
    "KnnConfig",
    "HingeConfig",
]
