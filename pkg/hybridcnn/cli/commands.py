"""Command handlers: turn resolved options into configs, call the service, print results."""

import json
import logging
from typing import Any, Callable

from pydantic import BaseModel, ValidationError

from hybridcnn.cli.parser import Invocation
from hybridcnn.core.errors import ConfigError
from hybridcnn.models.dataset import AugmentationConfig, SplitSpec
from hybridcnn.models.downstream import ForestConfig, HingeConfig, KnnConfig
from hybridcnn.models.hybrid import HybridModelConfig
from hybridcnn.models.training import TrainConfig
from hybridcnn.services.pipeline_service import PipelineService, write_json, write_run_sidecar

logger = logging.getLogger(__name__)

Handler = Callable[[Invocation, PipelineService], int]


# ==================== CONFIG BUILDERS ====================

def _build(model: type[BaseModel], **values: Any) -> BaseModel:
    try:
        return model(**{k: v for k, v in values.items() if v is not None})
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join([model.__name__, *(str(part) for part in first["loc"])])
        raise ConfigError(f"{where}: {first['msg']}")


def model_config(opts: dict[str, Any]) -> HybridModelConfig:
    return _build(
        HybridModelConfig,
        input_size=opts.get("input_size"),
        channel_widths=opts.get("widths"),
        use_attention=not opts.get("no_attention", False),
        use_cnc_branch=not opts.get("no_cnc", False),
        use_dsc_branch=not opts.get("no_dsc", False),
        use_mfe_branch=not opts.get("no_mfe", False),
        seed=opts.get("seed"),
    )


def train_config(opts: dict[str, Any], checkpoint_path: str | None) -> TrainConfig:
    return _build(
        TrainConfig,
        learning_rate=opts["lr"],
        epochs=opts["epochs"],
        batch_size=opts["batch"],
        seed=opts["seed"],
        checkpoint_path=checkpoint_path,
        validation_fraction=opts["val_fraction"],
    )


def split_spec(opts: dict[str, Any]) -> SplitSpec:
    return _build(SplitSpec, train_fraction=opts["train_fraction"], seed=opts["seed"])


def augmentation_config(opts: dict[str, Any]) -> AugmentationConfig:
    return _build(
        AugmentationConfig,
        per_class_target=opts["augment_target"],
        subsample_normal=opts["subsample_normal"],
        seed=opts["seed"],
    )


def classifier_config(opts: dict[str, Any]) -> ForestConfig | KnnConfig | HingeConfig:
    if opts["algo"] == "rf":
        return _build(ForestConfig, n_estimators=opts["n_estimators"], seed=opts["seed"])
    if opts["algo"] == "knn":
        return _build(KnnConfig, n_neighbors=opts["n_neighbors"])
    return _build(HingeConfig, seed=opts["seed"])


def _dump(**configs: BaseModel) -> dict[str, Any]:
    return {name: cfg.model_dump(mode="json") for name, cfg in configs.items()}


# ==================== HANDLERS ====================

def run_train(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    m_cfg, t_cfg = model_config(opts), train_config(opts, opts["out"])
    s_spec, a_cfg = split_spec(opts), augmentation_config(opts)
    result, report = service.train(opts["data_dir"], m_cfg, t_cfg, s_spec, a_cfg)
    write_run_sidecar(opts["out"], inv.command, {"options": opts, **_dump(model=m_cfg, train=t_cfg,
                      split=s_spec, augmentation=a_cfg)}, inv.seed)
    print(report.summary())
    print(f"checkpoint: {result.checkpoint}")
    if result.best_checkpoint:
        print(f"best checkpoint: {result.best_checkpoint} (epoch {result.best_epoch})")
    return 0


def run_ablate(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    m_cfg, t_cfg = model_config(opts), train_config(opts, None)
    s_spec, a_cfg = split_spec(opts), augmentation_config(opts)
    reports = service.ablate(opts["data_dir"], m_cfg, t_cfg, s_spec, a_cfg)
    write_json(opts["out"], [r.model_dump(mode="json") for r in reports])
    write_run_sidecar(opts["out"], inv.command, {"options": opts, **_dump(model=m_cfg, train=t_cfg,
                      split=s_spec, augmentation=a_cfg)}, inv.seed)
    for r in reports:
        print(f"{r.label:<40} AC={r.accuracy:.4f} F1={r.f1:.4f} params={r.param_count}")
    return 0


def run_eval(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    report = service.evaluate(opts["model"], opts["data_dir"], opts["batch"])
    write_json(opts["report"], report.model_dump(mode="json"))
    write_run_sidecar(opts["report"], inv.command, {"options": opts}, inv.seed)
    print(report.summary())
    return 0


def run_extract(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    table = service.extract(opts["model"], opts["data_dir"], opts["out"])
    write_run_sidecar(opts["out"], inv.command, {"options": opts}, inv.seed)
    print(f"features: {len(table)} rows -> {opts['out']}")
    return 0


def run_fit_ml(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    c_cfg = classifier_config(opts)
    report = service.fit_ml(
        opts["features"], opts["algo"], opts["folds"], c_cfg, opts["seed"],
        test_features=opts["test_features"], model_out=opts["out"],
    )
    for artifact in (opts["report"], opts["out"]):
        if artifact:
            write_run_sidecar(artifact, inv.command, {"options": opts, **_dump(classifier=c_cfg)}, inv.seed)
    if opts["report"]:
        write_json(opts["report"], report.model_dump(mode="json"))
    print(f"{report.classifier} ({report.mode}, folds={report.folds})")
    print(report.metrics.summary())
    return 0


def run_gradcheck(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    if opts["report"]:
        write_run_sidecar(opts["report"], inv.command, {"options": opts}, inv.seed)
    report = service.gradcheck(opts["scope"], opts["seed"], opts["report"])
    for entry in report.entries:
        print(f"{entry.name:<32} {entry.max_rel_error:.3e}  (tol {entry.tolerance:.0e})")
    print(f"gradcheck {report.scope}: ok, worst {report.worst.name} {report.worst.max_rel_error:.3e}")
    return 0


def run_gradcam(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    result = service.gradcam(
        opts["model"], opts["image"], opts["out"], opts["branch"], opts["target_class"], opts["sfm_dir"],
    )
    write_run_sidecar(opts["out"], inv.command, {"options": opts}, inv.seed)
    status = " (degenerate map)" if result.degenerate else ""
    print(f"gradcam class={result.target_class} branch={result.branch} -> {opts['out']}{status}")
    return 0


def run_count(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    m_cfg = model_config(opts)
    cost, table = service.count(m_cfg)
    print(f"config: params={cost.param_count} ({cost.param_count / 1e6:.3f} M) "
          f"flops={cost.flop_count} ({cost.flop_count / 1e9:.3f} G) conv_layers={cost.conv_layers}")
    print(f"{'row':<40} {'params(M)':>10} {'ref(M)':>8} {'flops(G)':>10} {'ref(G)':>8}")
    for row in table:
        print(f"{row['row']:<40} {row['params_millions']:>10.3f} {row['reference_params_millions']:>8.2f} "
              f"{row['flops_giga']:>10.3f} {row['reference_flops_giga']:>8.2f}")
    if opts["out"]:
        write_json(opts["out"], {"config": cost.model_dump(mode="json"), "rows": table})
        write_run_sidecar(opts["out"], inv.command, {"options": opts, **_dump(model=m_cfg)}, inv.seed)
    return 0


def run_manifest(inv: Invocation, service: PipelineService) -> int:
    opts = inv.options
    path = service.manifest(opts["data_dir"], opts["out"], opts["input_size"], split_spec(opts),
                            augmentation_config(opts))
    write_run_sidecar(path, inv.command, {"options": opts}, inv.seed)
    print(f"manifest -> {path}")
    return 0


HANDLERS: dict[str, Handler] = {
    "train": run_train,
    "ablate": run_ablate,
    "eval": run_eval,
    "extract": run_extract,
    "fit-ml": run_fit_ml,
    "gradcheck": run_gradcheck,
    "gradcam": run_gradcam,
    "count": run_count,
    "manifest": run_manifest,
}


def dispatch(inv: Invocation, service: PipelineService) -> int:
    logger.info(f"▶️ {inv.command}: {json.dumps(inv.options, sort_keys=True)}")
    return HANDLERS[inv.command](inv, service)
