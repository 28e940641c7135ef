"""Tests de la extracción de características de 128 dimensiones y su tabla CSV."""

import numpy as np
import pandas as pd
import pytest

from hybridcnn.core.errors import BadPathError, ConfigError, DatasetError
from hybridcnn.core.tensor import Tensor
from hybridcnn.data.dataset import LabeledDataset, LabeledItem
from hybridcnn.network import HybridCNN
from hybridcnn.services.features import FEATURE_COLUMNS, FEATURE_LENGTH, FeatureTable, extract_features


def test_one_row_of_128_per_image(tiny_config, toy_dataset):
    table = extract_features(HybridCNN(tiny_config), toy_dataset)
    assert FEATURE_LENGTH == 128
    assert table.features.shape == (len(toy_dataset), 128)
    np.testing.assert_array_equal(table.labels, toy_dataset.labels())
    assert table.paths[0] == toy_dataset[0].source
    assert np.all(table.features >= 0.0)


def test_identical_images_give_identical_rows(tiny_config):
    """Cada fila depende solo de los pesos y de su propia imagen."""
    image = np.random.default_rng(0).uniform(size=(3, 16, 16))
    other = np.random.default_rng(1).uniform(size=(3, 16, 16))
    dataset = LabeledDataset(items=[
        LabeledItem(image=image, label=0, source="a.png"),
        LabeledItem(image=other, label=1, source="b.png"),
        LabeledItem(image=image.copy(), label=1, source="c.png"),
    ])
    table = extract_features(HybridCNN(tiny_config), dataset)
    np.testing.assert_array_equal(table.features[0], table.features[2])


def test_rows_match_the_penultimate_tap(tiny_config, toy_dataset):
    model = HybridCNN(tiny_config)
    table = extract_features(model, toy_dataset)
    _, taps = model.forward(Tensor(toy_dataset[3].image[None], dtype=model.dtype))
    np.testing.assert_array_equal(table.features[3], taps.penultimate.data[0].astype(np.float64))


def test_non_standard_head_is_rejected(tiny_config, toy_dataset):
    model = HybridCNN(tiny_config.model_copy(update={"fc_widths": [64, 32, 16, 2]}))
    with pytest.raises(ConfigError):
        extract_features(model, toy_dataset)


def test_csv_round_trip_is_exact(tmp_path):
    """Cabecera label,path,f0..f127 y valores recuperados bit a bit."""
    rng = np.random.default_rng(0)
    table = FeatureTable(rng.normal(size=(6, 128)), [0, 1, 0, 1, 1, 0], [f"img_{i}.png" for i in range(6)])
    path = table.write_csv(tmp_path / "features.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header[:3] == ["label", "path", "f0"] and header[-1] == "f127"
    restored = FeatureTable.read_csv(path)
    np.testing.assert_array_equal(restored.features, table.features)
    np.testing.assert_array_equal(restored.labels, table.labels)
    assert restored.paths == table.paths


def test_csv_with_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    frame = pd.DataFrame(np.zeros((2, 128)), columns=FEATURE_COLUMNS)
    frame.insert(0, "label", [0, 1])
    frame.to_csv(path, index=False)
    with pytest.raises(DatasetError):
        FeatureTable.read_csv(path)


def test_missing_csv(tmp_path):
    with pytest.raises(BadPathError):
        FeatureTable.read_csv(tmp_path / "none.csv")


def test_rows_of_wrong_length():
    with pytest.raises(DatasetError):
        FeatureTable(np.zeros((2, 64)), [0, 1], ["a", "b"])
