"""Training and evaluation of classical classifiers on CNN features."""

import logging
from typing import Literal

import numpy as np

from hybridcnn.classifiers import KNeighborsClassifier, LinearHingeClassifier, RandomForestClassifier
from hybridcnn.classifiers.base import BinaryClassifier
from hybridcnn.core.errors import DatasetError
from hybridcnn.core.rng import Rng
from hybridcnn.models.downstream import ForestConfig, HingeConfig, KnnConfig
from hybridcnn.models.report import DownstreamReport, EvalReport
from hybridcnn.services.features import FeatureTable
from hybridcnn.services.metrics import evaluate_scores, mean_report

logger = logging.getLogger(__name__)

Algorithm = Literal["rf", "knn", "hinge"]
ClassifierConfig = ForestConfig | KnnConfig | HingeConfig


def fit_random_forest(table: FeatureTable, cfg: ForestConfig | None = None) -> RandomForestClassifier:
    cfg = cfg or ForestConfig()
    return RandomForestClassifier(
        n_estimators=cfg.n_estimators,
        max_features=cfg.max_features,
        max_depth=cfg.max_depth,
        bootstrap=cfg.bootstrap,
        random_state=cfg.seed,
        n_jobs=cfg.n_jobs,
    ).fit(table.features, table.labels)


def fit_knn(table: FeatureTable, cfg: KnnConfig | None = None) -> KNeighborsClassifier:
    cfg = cfg or KnnConfig()
    return KNeighborsClassifier(n_neighbors=cfg.n_neighbors).fit(table.features, table.labels)


def fit_linear_hinge(table: FeatureTable, cfg: HingeConfig | None = None) -> LinearHingeClassifier:
    cfg = cfg or HingeConfig()
    return LinearHingeClassifier(
        alpha=cfg.alpha, learning_rate=cfg.learning_rate, epochs=cfg.epochs, random_state=cfg.seed,
    ).fit(table.features, table.labels)


_FITTERS = {"rf": fit_random_forest, "knn": fit_knn, "hinge": fit_linear_hinge}


def fit_classifier(algo: Algorithm, table: FeatureTable, cfg: ClassifierConfig | None = None) -> BinaryClassifier:
    if algo not in _FITTERS:
        raise ValueError(f"Unknown algorithm: {algo}")
    return _FITTERS[algo](table, cfg)


def evaluate_downstream(model: BinaryClassifier, table: FeatureTable) -> EvalReport:
    """Same metric definitions as the CNN; scores are the class-1 probability."""
    if len(table) == 0:
        raise DatasetError("cannot evaluate on an empty feature table")
    scores = model.predict_proba(table.features)[:, 1]
    return evaluate_scores(table.labels, scores, predictions=model.predict(table.features))


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """
    Partition row indices into `folds` stratified test folds.

    Each class is shuffled and dealt round-robin, so every row lands in
    exactly one fold and class counts per fold differ by at most one.
    """
    if folds < 2:
        raise ValueError(f"cross-validation needs at least 2 folds, got {folds}")
    rng = Rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    for label in (0, 1):
        members = np.flatnonzero(labels == label)
        shuffled = members[rng.permutation(len(members))]
        assignment[shuffled] = np.arange(len(shuffled)) % folds
    return [np.flatnonzero(assignment == k) for k in range(folds)]


def cross_validate(
    algo: Algorithm,
    table: FeatureTable,
    cfg: ClassifierConfig | None = None,
    folds: int = 5,
    seed: int = 42,
) -> DownstreamReport:
    """k-fold evaluation; the summary metrics are the fold means."""
    reports = []
    for k, test_idx in enumerate(stratified_folds(table.labels, folds, seed)):
        train_idx = np.setdiff1d(np.arange(len(table)), test_idx)
        model = fit_classifier(algo, table.subset(train_idx), cfg)
        report = evaluate_downstream(model, table.subset(test_idx))
        logger.info(f"📊 {algo} fold {k + 1}/{folds}: AC={report.accuracy:.4f}")
        reports.append(report)
    return DownstreamReport(
        classifier=algo, mode="cross_validation", folds=folds, metrics=mean_report(reports), fold_reports=reports,
    )


def holdout(
    algo: Algorithm,
    train_table: FeatureTable,
    test_table: FeatureTable,
    cfg: ClassifierConfig | None = None,
) -> tuple[BinaryClassifier, DownstreamReport]:
    """Fit on one table, report on another."""
    model = fit_classifier(algo, train_table, cfg)
    report = evaluate_downstream(model, test_table)
    logger.info(f"📊 {algo} holdout: AC={report.accuracy:.4f}")
    return model, DownstreamReport(classifier=algo, mode="holdout", folds=1, metrics=report)
