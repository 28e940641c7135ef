"""Tests del contenedor HCNN y de la persistencia de modelos y clasificadores."""

import json
import struct

import numpy as np
import pytest

from hybridcnn.classifiers import KNeighborsClassifier, LinearHingeClassifier, RandomForestClassifier
from hybridcnn.core.checkpoint import MAGIC, decode, encode
from hybridcnn.core.config import settings
from hybridcnn.core.errors import (
    BadMagicError,
    BadPathError,
    CheckpointError,
    ConfigError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from hybridcnn.core.tensor import Tensor
from hybridcnn.network import HybridCNN
from hybridcnn.services.checkpoints import (
    load_checkpoint,
    load_classifier,
    save_checkpoint,
    save_classifier,
    sidecar_path,
)


@pytest.fixture
def tensors():
    rng = np.random.default_rng(0)
    return {
        "conv.weight": rng.normal(size=(4, 3, 3, 3)).astype(np.float32),
        "dense.bias": rng.normal(size=5),
        "scalar": np.array(2.5, dtype=np.float32),
    }


# ==================== CONTAINER ====================

def test_container_layout_and_decode(tensors):
    """Magia, versión y número de entradas al inicio; decodifica con dtype y forma."""
    blob = encode(tensors)
    assert blob[:4] == MAGIC
    assert struct.unpack("<HI", blob[4:10]) == (settings.CHECKPOINT_VERSION, 3)
    decoded = decode(blob)
    assert list(decoded) == list(tensors)
    for name, array in tensors.items():
        assert decoded[name].dtype == array.dtype
        np.testing.assert_array_equal(decoded[name], array)


def test_bad_magic(tensors):
    blob = b"XXXX" + encode(tensors)[4:]
    with pytest.raises(BadMagicError):
        decode(blob)


def test_version_mismatch(tensors):
    blob = encode(tensors, version=settings.CHECKPOINT_VERSION + 1)
    with pytest.raises(VersionMismatchError):
        decode(blob)


@pytest.mark.parametrize("cut", [3, 9, 20, -1])
def test_truncated_payload(tensors, cut):
    """Un archivo cortado en cualquier punto no produce tensores parciales."""
    blob = encode(tensors)
    with pytest.raises((TruncatedCheckpointError, BadMagicError)):
        decode(blob[:cut])


def test_trailing_bytes_are_rejected(tensors):
    with pytest.raises(CheckpointError):
        decode(encode(tensors) + b"\x00")


def test_unsupported_dtype():
    with pytest.raises(CheckpointError):
        encode({"ints": np.arange(3)})


# ==================== HYBRID CNN ====================

def test_model_round_trip_is_bit_identical(tmp_path, tiny_config):
    """Guardar y cargar conserva pesos, buffers BN y salidas bit a bit."""
    model = HybridCNN(tiny_config)
    path = save_checkpoint(model, tmp_path / "model.ckpt")
    restored = load_checkpoint(path)

    assert restored.config == model.config
    for name, value in model.state().items():
        np.testing.assert_array_equal(restored.state()[name].data, value.data)
    x = Tensor(np.random.default_rng(1).uniform(size=(2, 3, 16, 16)))
    np.testing.assert_array_equal(model.forward(x)[0].data, restored.forward(x)[0].data)

    meta = json.loads(sidecar_path(path).read_text())
    assert meta["kind"] == "hybrid_cnn"
    assert meta["config"]["channel_widths"] == [4, 4, 4, 4]


def test_missing_checkpoint_is_bad_path(tmp_path):
    with pytest.raises(BadPathError) as excinfo:
        load_checkpoint(tmp_path / "nope.ckpt")
    assert excinfo.value.exit_code == 1


def test_checkpoint_without_container(tmp_path, tiny_config):
    path = save_checkpoint(HybridCNN(tiny_config), tmp_path / "model.ckpt")
    path.unlink()
    with pytest.raises(BadPathError):
        load_checkpoint(path)


def test_checkpoint_with_mismatched_config(tmp_path, tiny_config):
    """Un sidecar con otra arquitectura no encaja con los tensores guardados."""
    path = save_checkpoint(HybridCNN(tiny_config), tmp_path / "model.ckpt")
    meta = json.loads(sidecar_path(path).read_text())
    meta["config"]["use_attention"] = False
    sidecar_path(path).write_text(json.dumps(meta))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_classifier_sidecar_is_not_a_model(tmp_path):
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    path = save_classifier(KNeighborsClassifier(n_neighbors=1).fit(X, [0, 0, 1, 1]), tmp_path / "knn.ckpt")
    with pytest.raises(ConfigError):
        load_checkpoint(path)


# ==================== CLASSIFIERS ====================

@pytest.mark.parametrize(
    "estimator",
    [RandomForestClassifier(n_estimators=5, random_state=0), KNeighborsClassifier(n_neighbors=3),
     LinearHingeClassifier(epochs=50)],
)
def test_classifier_round_trip(tmp_path, estimator):
    """Un clasificador recargado predice las mismas probabilidades."""
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-2, 1, size=(20, 4)), rng.normal(2, 1, size=(20, 4))])
    y = np.repeat([0, 1], 20)
    fitted = estimator.fit(X, y)
    restored = load_classifier(save_classifier(fitted, tmp_path / "clf.ckpt"))
    assert type(restored) is type(fitted)
    np.testing.assert_array_equal(restored.predict_proba(X), fitted.predict_proba(X))
