"""Pipeline service: one method per CLI workflow, plus artifact sidecars."""

import json
import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from hybridcnn import __version__
from hybridcnn.core.errors import BadPathError, GradcheckFailure
from hybridcnn.core.rng import Rng
from hybridcnn.data.augmentation import augment_to_target, subsample_class
from hybridcnn.data.dataset import LabeledDataset, load_folder, write_manifest
from hybridcnn.data.splitting import split
from hybridcnn.models.dataset import AugmentationConfig, SplitSpec
from hybridcnn.models.downstream import ForestConfig, HingeConfig, KnnConfig
from hybridcnn.models.hybrid import HybridModelConfig, ModelCost
from hybridcnn.models.report import DownstreamReport, EvalReport, GradcheckReport
from hybridcnn.models.training import EpochRecord, TrainConfig
from hybridcnn.network.accounting import cost_table, count_params_and_flops
from hybridcnn.network.hybrid import HybridCNN, predict_proba
from hybridcnn.services.ablation import run_ablation
from hybridcnn.services.checkpoints import load_checkpoint, save_classifier
from hybridcnn.services.downstream import cross_validate, fit_classifier, holdout, stratified_folds
from hybridcnn.services.evaluator import evaluate
from hybridcnn.services.features import FeatureTable, extract_features
from hybridcnn.services.gradcam import GradcamResult, export_sfm_maps, gradcam, write_overlay
from hybridcnn.services.gradcheck import gradcheck
from hybridcnn.services.trainer import TrainResult, train
from hybridcnn.utils.imaging import load_image

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["epoch", "loss", "acc", "pr", "re", "val_loss", "val_acc", "val_pr", "val_re"]


# ==================== ARTIFACT HELPERS ====================

def run_sidecar_path(artifact: str | Path) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + ".run.json")


def write_run_sidecar(artifact: str | Path, command: str, config: dict[str, Any], seed: Optional[int]) -> Path:
    """`<artifact>.run.json`: command, resolved config, seed and tool version."""
    path = run_sidecar_path(artifact)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, "config": config, "seed": seed, "tool_version": __version__}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str), encoding="utf-8")
    return path


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def write_curves(path: str | Path, curves: list[EpochRecord]) -> Path:
    """Curves CSV: epoch,loss,acc,pr,re,val_loss,val_acc,val_pr,val_re."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([c.model_dump() for c in curves], columns=CURVE_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def curves_path(checkpoint: str | Path) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(f"{checkpoint.stem}.curves.csv")


def report_path(checkpoint: str | Path) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(f"{checkpoint.stem}.report.json")


# ==================== SERVICE ====================

class PipelineService:
    """Glue between the CLI and the library: data preparation, artifacts, logging."""

    # -------------------- data --------------------

    def prepare_splits(
        self,
        data_dir: str | Path,
        input_size: int,
        split_spec: SplitSpec,
        augmentation: AugmentationConfig,
    ) -> tuple[LabeledDataset, LabeledDataset]:
        """
        Load a folder, optionally subsample normals, split, then augment the
        training side only.
        """
        dataset = load_folder(data_dir, input_size)
        if augmentation.subsample_normal is not None:
            dataset = subsample_class(dataset, 0, augmentation.subsample_normal, Rng(augmentation.seed))
        train_set, test_set = split(dataset, split_spec)
        if augmentation.per_class_target is not None:
            train_set = augment_to_target(
                train_set, augmentation.per_class_target, Rng(augmentation.seed).derive(1), augmentation.noise_sigma,
            )
        return train_set, test_set

    # -------------------- train / eval --------------------

    def train(
        self,
        data_dir: str | Path,
        model_config: HybridModelConfig,
        train_config: TrainConfig,
        split_spec: SplitSpec,
        augmentation: AugmentationConfig,
    ) -> tuple[TrainResult, EvalReport]:
        """Train on the training split, evaluate on the test split, write checkpoint, curves and report."""
        train_set, test_set = self.prepare_splits(data_dir, model_config.input_size, split_spec, augmentation)
        model = HybridCNN(model_config)
        logger.info(f"🧠 Model: {model.param_count()} parameters, branches {model_config.enabled_branches}")
        result = train(model, train_set, train_config)
        report = evaluate(result.model, test_set, train_config.batch_size)
        report.curves = result.curves
        if train_config.checkpoint_path:
            write_curves(curves_path(train_config.checkpoint_path), result.curves)
            write_json(report_path(train_config.checkpoint_path), report.model_dump(mode="json"))
        return result, report

    def evaluate(self, model_path: str | Path, data_dir: str | Path, batch_size: int = 16) -> EvalReport:
        """Evaluate a checkpoint on every image of a folder (any dataset)."""
        model = load_checkpoint(model_path)
        dataset = load_folder(data_dir, model.config.input_size)
        return evaluate(model, dataset, batch_size)

    def ablate(
        self,
        data_dir: str | Path,
        model_config: HybridModelConfig,
        train_config: TrainConfig,
        split_spec: SplitSpec,
        augmentation: AugmentationConfig,
    ) -> list[EvalReport]:
        train_set, test_set = self.prepare_splits(data_dir, model_config.input_size, split_spec, augmentation)
        return run_ablation(train_set, test_set, train_config, model_config)

    # -------------------- features / downstream --------------------

    def extract(self, model_path: str | Path, data_dir: str | Path, out: str | Path) -> FeatureTable:
        model = load_checkpoint(model_path)
        table = extract_features(model, load_folder(data_dir, model.config.input_size))
        table.write_csv(out)
        return table

    def fit_ml(
        self,
        features_path: str | Path,
        algo: str,
        folds: int,
        classifier_config: ForestConfig | KnnConfig | HingeConfig,
        seed: int,
        test_features: str | Path | None = None,
        model_out: str | Path | None = None,
    ) -> DownstreamReport:
        """
        Cross-validation when `folds` > 1, otherwise a holdout evaluation on
        `test_features` (or a stratified 20% of the table).
        """
        table = FeatureTable.read_csv(features_path)
        if folds > 1:
            report = cross_validate(algo, table, classifier_config, folds=folds, seed=seed)
            model = fit_classifier(algo, table, classifier_config) if model_out else None
        else:
            if test_features is not None:
                train_table, test_table = table, FeatureTable.read_csv(test_features)
            else:
                test_idx = stratified_folds(table.labels, 5, seed)[0]
                train_idx = np.setdiff1d(np.arange(len(table)), test_idx)
                train_table, test_table = table.subset(train_idx), table.subset(test_idx)
            model, report = holdout(algo, train_table, test_table, classifier_config)
        if model_out and model is not None:
            save_classifier(model, model_out)
        return report

    # -------------------- verification / visualization --------------------

    def gradcheck(self, scope: str, seed: int, report_out: str | Path | None = None) -> GradcheckReport:
        """
        Run the gradient check and write its report.

        Raises:
            GradcheckFailure: Any entry above its tolerance (raised after the report is written)
        """
        report = gradcheck(scope, seed)
        if report_out is not None:
            write_json(report_out, report.model_dump(mode="json"))
        failed = [e for e in report.entries if not e.passed]
        for entry in failed:
            logger.error(f"❌ {entry.name}: {entry.max_rel_error:.3e} >= {entry.tolerance:.0e}")
        if failed:
            worst = report.worst
            raise GradcheckFailure(
                f"{len(failed)} of {len(report.entries)} checks failed; "
                f"worst {worst.name} rel_err={worst.max_rel_error:.3e}"
            )
        return report

    def gradcam(
        self,
        model_path: str | Path,
        image_path: str | Path,
        out: str | Path,
        branch: str = "all",
        target_class: Optional[int] = None,
        sfm_dir: str | Path | None = None,
    ) -> GradcamResult:
        """Heatmap for `target_class` (the predicted class by default) written as an overlay PNG."""
        if not Path(image_path).is_file():
            raise BadPathError(f"image not found: {image_path}")
        model = load_checkpoint(model_path)
        image = load_image(image_path, model.config.input_size)
        if target_class is None:
            target_class = int(np.argmax(predict_proba(model, image[None])[0]))
        result = gradcam(model, image, target_class, branch)
        write_overlay(image, result.heatmap, out)
        if sfm_dir is not None:
            export_sfm_maps(model, image, sfm_dir)
        return result

    def count(self, model_config: HybridModelConfig) -> tuple[ModelCost, list[dict]]:
        return count_params_and_flops(model_config), cost_table(model_config)

    def manifest(
        self,
        data_dir: str | Path,
        out: str | Path,
        input_size: int,
        split_spec: SplitSpec,
        augmentation: AugmentationConfig,
    ) -> Path:
        train_set, test_set = self.prepare_splits(data_dir, input_size, split_spec, augmentation)
        return write_manifest(out, {"train": train_set, "test": test_set})
