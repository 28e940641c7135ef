"""Tests de ingestión de carpetas, aumento de datos, submuestreo y particiones."""

import numpy as np
import pandas as pd
import pytest
from PIL import Image

from hybridcnn.core.errors import BadPathError, DatasetError
from hybridcnn.core.rng import Rng
from hybridcnn.data import augment_to_target, batches, load_folder, split, subsample_class
from hybridcnn.data.dataset import MANIFEST_COLUMNS, write_manifest
from hybridcnn.data.splitting import batch_indices
from hybridcnn.models.dataset import SplitSpec
from hybridcnn.utils.imaging import hflip, rotate90, vflip

from tests.conftest import color_dataset, write_color_folder


# ==================== INGESTION ====================

def test_two_files_per_class(tmp_path):
    """2 archivos por clase: 4 elementos con etiquetas {0,0,1,1}."""
    root = write_color_folder(tmp_path / "d", per_class=2, size=20)
    dataset = load_folder(root, input_size=16)
    assert len(dataset) == 4
    assert dataset.labels().tolist() == [0, 0, 1, 1]
    assert dataset[0].image.shape == (3, 16, 16)
    assert dataset[0].source.endswith("normal_000.png")


def test_grayscale_replicated_to_three_channels(tmp_path):
    """Una imagen en escala de grises se replica a 3 canales."""
    root = write_color_folder(tmp_path / "d", per_class=1, size=16)
    Image.fromarray(np.full((16, 16), 128, dtype=np.uint8)).save(root / "normal" / "gray.png")
    dataset = load_folder(root, input_size=16)
    gray = next(item for item in dataset if item.source.endswith("gray.png"))
    np.testing.assert_array_equal(gray.image[0], gray.image[1])
    np.testing.assert_array_equal(gray.image[1], gray.image[2])


def test_corrupt_file_is_skipped(tmp_path):
    """Archivo corrupto entre 10: 9 elementos y 1 omitido."""
    root = write_color_folder(tmp_path / "d", per_class=5, size=16)
    (root / "abnormal" / "abnormal_004.png").write_bytes(b"not an image")
    dataset = load_folder(root, input_size=16)
    assert len(dataset) == 9
    assert len(dataset.skipped) == 1


def test_parallel_decoding_keeps_order(image_folder):
    """Decodificación con varios hilos: mismo orden lexicográfico."""
    serial = load_folder(image_folder, input_size=16, num_workers=1)
    parallel = load_folder(image_folder, input_size=16, num_workers=4)
    assert [i.source for i in serial] == [i.source for i in parallel]
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.image, b.image)


def test_missing_root_and_empty_class(tmp_path):
    with pytest.raises(BadPathError):
        load_folder(tmp_path / "nope")
    root = write_color_folder(tmp_path / "d", per_class=1, size=16)
    for f in (root / "abnormal").iterdir():
        f.unlink()
    with pytest.raises(DatasetError):
        load_folder(root, input_size=16)


# ==================== AUGMENTATION ====================

def test_flips_and_rotations_are_exact_inverses():
    """Doble volteo y cuatro rotaciones de 90° recuperan el original."""
    image = np.random.default_rng(0).uniform(size=(3, 8, 8))
    np.testing.assert_array_equal(hflip(hflip(image)), image)
    np.testing.assert_array_equal(vflip(vflip(image)), image)
    rotated = image
    for _ in range(4):
        rotated = rotate90(rotated, 1)
    np.testing.assert_array_equal(rotated, image)


def test_augment_to_target_counts_and_tags():
    """Cada clase llega al objetivo; los sintéticos llevan su transformación."""
    dataset = color_dataset(per_class=4, size=8)
    grown = augment_to_target(dataset, 10, Rng(0))
    assert grown.class_counts() == {0: 10, 1: 10}
    synthetic = [item for item in grown if item.is_synthetic]
    assert len(synthetic) == 12
    assert {item.augmentation for item in synthetic} <= {"hflip", "vflip", "rot90", "rot180", "rot270", "noise"}
    originals = {item.source for item in dataset}
    assert all(item.origin in originals for item in synthetic)
    assert all(0.0 <= item.image.min() and item.image.max() <= 1.0 for item in synthetic)


def test_augment_rejects_target_below_class_size():
    with pytest.raises(DatasetError):
        augment_to_target(color_dataset(per_class=4, size=8), 3, Rng(0))


def test_subsample_class():
    """Submuestreo: tamaño exacto, identidad con el tamaño total y determinismo."""
    dataset = color_dataset(per_class=10, size=8)
    kept = subsample_class(dataset, 0, 4, Rng(1))
    assert kept.class_counts() == {0: 4, 1: 10}
    again = subsample_class(dataset, 0, 4, Rng(1))
    assert [i.source for i in kept] == [i.source for i in again]
    same = subsample_class(dataset, 0, 10, Rng(1))
    assert sorted(i.source for i in same) == sorted(i.source for i in dataset)
    with pytest.raises(DatasetError):
        subsample_class(dataset, 0, 11, Rng(1))


# ==================== SPLITS / BATCHES ====================

def test_stratified_split_80_20():
    """100 elementos 50/50 con 0.8: 80 (40/40) y 20 (10/10)."""
    train, test = split(color_dataset(per_class=50, size=4), SplitSpec(train_fraction=0.8, seed=3))
    assert train.class_counts() == {0: 40, 1: 40}
    assert test.class_counts() == {0: 10, 1: 10}
    assert not {i.source for i in train} & {i.source for i in test}


def test_split_never_leaks_synthetic_items():
    """Los sintéticos siguen a su original; el test no contiene sintéticos."""
    grown = augment_to_target(color_dataset(per_class=10, size=4), 30, Rng(2))
    train, test = split(grown, SplitSpec(seed=5))
    train_sources = {i.source for i in train if not i.is_synthetic}
    assert not any(i.is_synthetic for i in test)
    assert all(i.origin in train_sources for i in train if i.is_synthetic)


def test_split_is_deterministic():
    dataset = color_dataset(per_class=10, size=4)
    a, _ = split(dataset, SplitSpec(seed=9))
    b, _ = split(dataset, SplitSpec(seed=9))
    assert [i.source for i in a] == [i.source for i in b]


def test_batches_partial_and_ordered():
    """10 elementos, lote 16: un único lote de 10 en orden."""
    dataset = color_dataset(per_class=5, size=4)
    produced = list(batches(dataset, 16))
    assert len(produced) == 1
    images, onehot = produced[0]
    assert images.shape == (10, 3, 4, 4)
    assert onehot.data[:, 1].tolist() == [0.0] * 5 + [1.0] * 5
    assert [idx.tolist() for idx in batch_indices(5, 2, shuffle=False)] == [[0, 1], [2, 3], [4]]
    shuffled = [idx.tolist() for idx in batch_indices(7, 3, shuffle=True, rng=Rng(4))]
    assert shuffled == [idx.tolist() for idx in batch_indices(7, 3, shuffle=True, rng=Rng(4))]


def test_manifest_lists_every_item(tmp_path):
    """El manifiesto CSV enumera ruta, etiqueta, transformación y partición."""
    dataset = augment_to_target(color_dataset(per_class=3, size=4), 5, Rng(0))
    train, test = split(dataset, SplitSpec(seed=1))
    path = write_manifest(tmp_path / "manifest.csv", {"train": train, "test": test})
    frame = pd.read_csv(path)
    assert list(frame.columns) == MANIFEST_COLUMNS
    assert len(frame) == len(train) + len(test)
    assert set(frame["split"]) == {"train", "test"}
