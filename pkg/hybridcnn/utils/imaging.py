"""Image decoding, geometric transforms, noise and PNG output.

Images are float arrays `[3, H, W]` with values in [0, 1].
"""

import logging
from pathlib import Path

import numpy as np
from matplotlib import colormaps
from PIL import Image, UnidentifiedImageError

from hybridcnn.core.errors import DatasetError
from hybridcnn.core.rng import Rng

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


# ==================== I/O ====================

def load_image(path: str | Path, size: int) -> np.ndarray:
    """
    Decode an image file to `[3, size, size]` float64 in [0, 1].

    Grayscale and palette images are converted to RGB (channels replicated);
    resizing is bilinear.

    Raises:
        DatasetError: If the file cannot be decoded
    """
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            if rgb.size != (size, size):
                rgb = rgb.resize((size, size), Image.BILINEAR)
            array = np.asarray(rgb, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise DatasetError(f"cannot decode image {path}: {e}") from e
    return np.ascontiguousarray(array.transpose(2, 0, 1))


def to_uint8(array: np.ndarray) -> np.ndarray:
    return np.round(np.clip(array, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(array: np.ndarray, path: str | Path) -> Path:
    """Write a `[H, W]`, `[3, H, W]` or `[H, W, 3]` array in [0, 1] as PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if array.ndim == 3 and array.shape[0] == 3:
        array = array.transpose(1, 2, 0)
    Image.fromarray(to_uint8(array)).save(path, format="PNG")
    return path


def resize_map(heatmap: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of a single-channel float map (PIL mode ``F``)."""
    if heatmap.shape == (height, width):
        return heatmap.astype(np.float64)
    img = Image.fromarray(heatmap.astype(np.float32))
    return np.asarray(img.resize((width, height), Image.BILINEAR), dtype=np.float64)


def min_max_normalize(array: np.ndarray) -> np.ndarray:
    low, high = float(array.min()), float(array.max())
    if high - low <= 0:
        return np.zeros_like(array, dtype=np.float64)
    return (array - low) / (high - low)


def overlay_heatmap(image: np.ndarray, heatmap: np.ndarray, alpha: float = 0.4, cmap: str = "jet") -> np.ndarray:
    """
    Blend a `[H, W]` heatmap in [0, 1] over a `[3, H, W]` image.

    Returns:
        `[H, W, 3]` float array in [0, 1]
    """
    colored = colormaps[cmap](np.clip(heatmap, 0.0, 1.0))[..., :3]
    base = image.transpose(1, 2, 0)
    return np.clip((1.0 - alpha) * base + alpha * colored, 0.0, 1.0)


# ==================== TRANSFORMS ====================

def hflip(image: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(image[:, :, ::-1])


def vflip(image: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(image[:, ::-1, :])


def rotate90(image: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Counter-clockwise rotation by 90 degrees times `quarter_turns` (square images keep their shape)."""
    return np.ascontiguousarray(np.rot90(image, k=quarter_turns, axes=(1, 2)))


def add_gaussian_noise(image: np.ndarray, sigma: float, rng: Rng) -> np.ndarray:
    """Additive N(0, sigma^2) noise, clipped back to [0, 1]."""
    return np.clip(image + rng.normal(0.0, sigma, size=image.shape), 0.0, 1.0)
