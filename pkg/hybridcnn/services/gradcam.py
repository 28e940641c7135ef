"""GradCAM heatmaps and statistical-feature-map visualizations."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from hybridcnn.core.errors import ConfigError, ShapeError
from hybridcnn.core.tensor import Tape, Tensor, backward, no_record
from hybridcnn.network.hybrid import HybridCNN
from hybridcnn.network.sfm import compute_sfm
from hybridcnn.utils.imaging import min_max_normalize, overlay_heatmap, resize_map, save_png

logger = logging.getLogger(__name__)

CamBranch = Literal["all", "cnc", "dsc", "mfe"]


@dataclass
class GradcamResult:
    heatmap: np.ndarray
    target_class: int
    branch: str
    degenerate: bool = False


def cam_from_activations(activations: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """
    Class activation map from one image's feature maps and their gradients.

    Args:
        activations: `[C, h, w]`
        gradients: `[C, h, w]`, d(score)/d(activations)

    Returns:
        `[h, w]` map `relu(sum_k w_k A_k)` with `w_k` the spatial mean of
        channel k's gradient
    """
    weights = gradients.mean(axis=(1, 2))
    return np.maximum(np.tensordot(weights, activations, axes=1), 0.0)


def gradcam(model: HybridCNN, image: np.ndarray, target_class: int, branch: CamBranch = "all") -> GradcamResult:
    """
    GradCAM heatmap of `target_class` for one `[3, H, W]` image.

    The tapped layer is the concatenated block-4 output (``all``) or the
    block-4 output of one branch. The map is bilinearly upsampled to the
    input size and divided by its maximum, so its peak is exactly 1. A map
    with no positive evidence is returned flat (all zeros) with a warning.

    Raises:
        ConfigError: `branch` is not enabled in the model
        ShapeError: Bad image shape or class index
    """
    if target_class not in (0, 1):
        raise ShapeError(f"target_class must be 0 or 1, got {target_class}")
    if branch != "all" and branch not in model.config.enabled_branches:
        raise ConfigError(f"branch '{branch}' is disabled in this model")
    if image.ndim != 3:
        raise ShapeError(f"gradcam expects one [3, H, W] image, got {image.shape}")

    with Tape() as tape:
        logits, taps = model.forward(Tensor(image[None], dtype=model.dtype), mode="eval")
        selector = np.zeros(logits.shape)
        selector[0, target_class] = 1.0
        score = (logits * Tensor(selector, dtype=logits.dtype)).sum()
    feature = taps.concat if branch == "all" else taps.blocks[branch][-1]
    grads = backward(tape, score)
    feature_grad = grads[feature] if feature in grads else np.zeros(feature.shape)

    cam = cam_from_activations(feature.data[0].astype(np.float64), feature_grad[0].astype(np.float64))
    height, width = image.shape[1:]
    heatmap = np.maximum(resize_map(cam, height, width), 0.0)
    peak = float(heatmap.max())
    if peak <= 0.0:
        logger.warning(f"⚠️ Degenerate GradCAM for class {target_class} ({branch}): flat map")
        return GradcamResult(np.zeros((height, width)), target_class, branch, degenerate=True)
    return GradcamResult(heatmap / peak, target_class, branch)


def write_overlay(image: np.ndarray, heatmap: np.ndarray, path: str | Path, alpha: float = 0.4) -> Path:
    """Blend the heatmap (jet colormap) over the image and save as PNG."""
    path = save_png(overlay_heatmap(image, heatmap, alpha=alpha), path)
    logger.info(f"🖼️ GradCAM overlay written to {path}")
    return path


def export_sfm_maps(model: HybridCNN, image: np.ndarray, out_dir: str | Path) -> list[Path]:
    """
    Save the max and variance maps of every block of every enabled branch.

    Files are ``<branch>_block<i>_max.png`` and ``<branch>_block<i>_var.png``,
    each min-max normalized to grayscale.
    """
    out_dir = Path(out_dir)
    written = []
    with no_record():
        _, taps = model.forward(Tensor(image[None], dtype=model.dtype), mode="eval")
        for branch, outputs in taps.blocks.items():
            for i, block in enumerate(outputs, start=1):
                sfm = compute_sfm(block)
                for kind, tensor in (("max", sfm.max_map), ("var", sfm.var_map)):
                    path = out_dir / f"{branch}_block{i}_{kind}.png"
                    written.append(save_png(min_max_normalize(tensor.data[0, 0].astype(np.float64)), path))
    logger.info(f"🖼️ Wrote {len(written)} SFM maps to {out_dir}")
    return written
