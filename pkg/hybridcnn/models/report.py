"""Evaluation and verification reports."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from hybridcnn.models.training import EpochRecord

EXCLUDED_CLASSIFIERS = ["svm_cubic", "gradient_boosting", "adaboost"]


class RocPoint(BaseModel):
    fpr: float
    tpr: float
    threshold: float


class EvalReport(BaseModel):
    """Binary classification metrics with abnormal (1) as the positive class."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "confusion": [[40, 10], [10, 40]],
                "accuracy": 0.8,
                "precision": 0.8,
                "recall": 0.8,
                "f1": 0.8,
                "roc_auc": 0.87,
                "kappa": 0.6,
                "n_samples": 100,
            }
        }
    )

    confusion: list[list[int]] = Field(..., description="[[TN, FP], [FN, TP]]")
    accuracy: float = Field(..., ge=0.0, le=1.0)
    precision: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)
    roc_auc: Optional[float] = Field(None, description="Absent when only one class is present")
    kappa: float = Field(..., ge=-1.0, le=1.0)
    n_samples: int = Field(..., ge=0)
    param_count: Optional[int] = None
    flop_count: Optional[int] = None
    curves: list[EpochRecord] = Field(default_factory=list, description="Per-epoch training curves")
    roc: list[RocPoint] = Field(default_factory=list, description="ROC points behind roc_auc")
    data_source: Optional[str] = Field(None, description="Data root the report was computed on")
    label: Optional[str] = Field(None, description="Model or ablation row name")

    def summary(self) -> str:
        """Human-readable table."""
        auc = "n/a" if self.roc_auc is None else f"{self.roc_auc:.4f}"
        (tn, fp), (fn, tp) = self.confusion
        lines = [
            f"{'metric':<10} value",
            f"{'AC':<10} {self.accuracy:.4f}",
            f"{'PR':<10} {self.precision:.4f}",
            f"{'RE':<10} {self.recall:.4f}",
            f"{'F1':<10} {self.f1:.4f}",
            f"{'AUC':<10} {auc}",
            f"{'Kappa':<10} {self.kappa:.4f}",
            f"confusion  TN={tn} FP={fp} FN={fn} TP={tp}",
        ]
        return "\n".join(lines)


class DownstreamReport(BaseModel):
    """Metrics of a classical classifier trained on CNN features."""

    classifier: Literal["rf", "knn", "hinge"]
    mode: Literal["holdout", "cross_validation"]
    folds: int = Field(1, ge=1)
    metrics: EvalReport = Field(..., description="Holdout metrics, or the fold mean")
    fold_reports: list[EvalReport] = Field(default_factory=list)
    excluded_classifiers: list[str] = Field(default_factory=lambda: list(EXCLUDED_CLASSIFIERS))


class GradcheckEntry(BaseModel):
    name: str = Field(..., description="Operator or parameter group")
    max_rel_error: float
    tolerance: float
    passed: bool


class GradcheckReport(BaseModel):
    scope: Literal["op", "model"]
    seed: int
    entries: list[GradcheckEntry] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst(self) -> Optional[GradcheckEntry]:
        return max(self.entries, key=lambda e: e.max_rel_error / e.tolerance, default=None)
