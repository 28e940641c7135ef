"""Model persistence: HCNN tensor container plus a JSON config sidecar."""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from hybridcnn import __version__
from hybridcnn.classifiers import CLASSIFIERS
from hybridcnn.core.checkpoint import read_container, write_container
from hybridcnn.core.errors import BadPathError, CheckpointError, ConfigError
from hybridcnn.core.tensor import Tensor
from hybridcnn.models.hybrid import HybridModelConfig
from hybridcnn.network.hybrid import HybridCNN

logger = logging.getLogger(__name__)

HYBRID_KIND = "hybrid_cnn"


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _write_sidecar(path: Path, kind: str, config: dict[str, Any]) -> None:
    payload = {"kind": kind, "tool_version": __version__, "config": config}
    sidecar_path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def _read_sidecar(path: Path) -> dict[str, Any]:
    side = sidecar_path(path)
    if not side.is_file():
        raise BadPathError(f"config sidecar not found: {side}")
    try:
        return json.loads(side.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid sidecar {side}: {e}") from e


# ==================== HYBRID CNN ====================

def save_checkpoint(model: HybridCNN, path: str | Path) -> Path:
    """
    Write every parameter and BN buffer of `model`, then its config sidecar.

    Returns:
        The checkpoint path
    """
    path = Path(path)
    write_container(path, {name: t.data for name, t in model.state().items()})
    _write_sidecar(path, HYBRID_KIND, model.config.model_dump(mode="json"))
    return path


def load_checkpoint(path: str | Path) -> HybridCNN:
    """
    Rebuild a model bit-exactly from a checkpoint and its sidecar.

    Raises:
        BadPathError: Checkpoint or sidecar missing
        ConfigError: Sidecar is not a valid hybrid model config
        CheckpointError: Container corrupt, or tensors missing / unexpected
    """
    path = Path(path)
    meta = _read_sidecar(path)
    if meta.get("kind") != HYBRID_KIND:
        raise ConfigError(f"{path} holds a '{meta.get('kind')}', not a {HYBRID_KIND}")
    try:
        config = HybridModelConfig.model_validate(meta["config"])
    except (KeyError, ValidationError) as e:
        raise ConfigError(f"invalid model config in sidecar of {path}: {e}") from e

    arrays = read_container(path)
    model = HybridCNN(config)
    expected = set(model.state())
    missing, extra = expected - set(arrays), set(arrays) - expected
    if missing or extra:
        raise CheckpointError(
            f"checkpoint tensors do not match the config: missing={sorted(missing)[:5]} extra={sorted(extra)[:5]}"
        )
    model.load_state({name: Tensor(arrays[name], dtype=arrays[name].dtype) for name in model.state()})
    logger.info(f"💾 Loaded {len(arrays)} tensors from {path}")
    return model


# ==================== DOWNSTREAM CLASSIFIERS ====================

def save_classifier(estimator, path: str | Path) -> Path:
    """Persist a fitted downstream classifier in the same container format."""
    path = Path(path)
    tensors = {name: np.asarray(a, dtype=np.float64) for name, a in estimator.to_tensors().items()}
    write_container(path, tensors)
    _write_sidecar(path, estimator.kind, estimator.get_params())
    return path


def load_classifier(path: str | Path):
    """Inverse of `save_classifier`."""
    path = Path(path)
    meta = _read_sidecar(path)
    cls = CLASSIFIERS.get(meta.get("kind"))
    if cls is None:
        raise ConfigError(f"{path} is not a downstream classifier (kind={meta.get('kind')})")
    return cls(**meta["config"]).from_tensors(read_container(path))
