"""Fixtures compartidos: datasets sintéticos por color y configuraciones pequeñas."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import use_dtype
from hybridcnn.data.dataset import LabeledDataset, LabeledItem
from hybridcnn.models.hybrid import HybridModelConfig


def color_image(label: int, size: int, rng: Rng) -> np.ndarray:
    """Imagen `[3, S, S]` dominada por rojo (anormal) o verde (normal), con ruido leve."""
    image = rng.uniform(0.0, 0.2, size=(3, size, size))
    image[0 if label == 1 else 1] += 0.7
    return np.clip(image, 0.0, 1.0)


def write_color_folder(root: Path, per_class: int, size: int = 32, seed: int = 0) -> Path:
    """Crea root/normal y root/abnormal con PNGs separables por color."""
    rng = Rng(seed)
    for label, name in enumerate(("normal", "abnormal")):
        folder = root / name
        folder.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            pixels = (color_image(label, size, rng).transpose(1, 2, 0) * 255).round().astype(np.uint8)
            Image.fromarray(pixels).save(folder / f"{name}_{i:03d}.png")
    return root


def color_dataset(per_class: int, size: int, seed: int = 0) -> LabeledDataset:
    """Dataset en memoria con el mismo patrón de color (orden: normales primero)."""
    rng = Rng(seed)
    items = [
        LabeledItem(image=color_image(label, size, rng), label=label, source=f"mem/{label}/{i:03d}.png")
        for label in (0, 1)
        for i in range(per_class)
    ]
    return LabeledDataset(items=items, root="mem")


@pytest.fixture
def image_folder(tmp_path) -> Path:
    """8 imágenes por clase, 32x32."""
    return write_color_folder(tmp_path / "data", per_class=8)


@pytest.fixture
def toy_dataset() -> LabeledDataset:
    """16 imágenes por clase de 16x16 en memoria."""
    return color_dataset(per_class=16, size=16)


@pytest.fixture
def tiny_config() -> HybridModelConfig:
    """Modelo completo (todas las ramas) lo bastante pequeño para tests rápidos."""
    return HybridModelConfig(input_size=16, channel_widths=[4, 4, 4, 4], attention_width=4, seed=0)


@pytest.fixture
def float64():
    """Ejecuta el test con precisión float64."""
    with use_dtype("float64"):
        yield
