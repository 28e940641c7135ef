"""Labeled image datasets: folder ingestion and manifest export."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from hybridcnn.core.config import settings
from hybridcnn.core.errors import BadPathError, DatasetError
from hybridcnn.core.tensor import Tensor
from hybridcnn.utils.imaging import IMAGE_SUFFIXES, load_image

logger = logging.getLogger(__name__)

CLASS_NAMES = ("normal", "abnormal")
ORIGINAL = "original"


@dataclass(frozen=True, eq=False)
class LabeledItem:
    """
    One image with its label and provenance.

    Attributes:
        image: `[3, H, W]` float array in [0, 1]
        label: 0 = normal, 1 = abnormal
        source: File path (originals) or ``<origin>#<tag>-<n>`` (synthetic)
        augmentation: ``original`` or the transform tag
        origin: Source path of the original this item derives from
    """

    image: np.ndarray
    label: int
    source: str
    augmentation: str = ORIGINAL
    origin: str = ""

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DatasetError(f"label must be 0 or 1, got {self.label} for {self.source}")
        if not self.origin:
            object.__setattr__(self, "origin", self.source)

    @property
    def is_synthetic(self) -> bool:
        return self.augmentation != ORIGINAL


@dataclass
class LabeledDataset:
    """Ordered collection of labeled images sharing one input size."""

    items: list[LabeledItem] = field(default_factory=list)
    root: str | None = None
    skipped: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, index: int) -> LabeledItem:
        return self.items[index]

    @property
    def input_size(self) -> int | None:
        return self.items[0].image.shape[-1] if self.items else None

    def labels(self) -> np.ndarray:
        return np.array([item.label for item in self.items], dtype=np.int64)

    def class_counts(self) -> dict[int, int]:
        labels = self.labels()
        return {c: int((labels == c).sum()) for c in (0, 1)}

    def indices_of(self, label: int, originals_only: bool = False) -> list[int]:
        return [
            i for i, item in enumerate(self.items)
            if item.label == label and not (originals_only and item.is_synthetic)
        ]

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(items=[self.items[i] for i in indices], root=self.root)

    def stack(self, indices=None) -> tuple[Tensor, Tensor]:
        """
        Images `[N, 3, H, W]` and one-hot labels `[N, 2]` as tensors.

        Raises:
            DatasetError: If the selection is empty
        """
        chosen = [self.items[i] for i in (range(len(self.items)) if indices is None else indices)]
        if not chosen:
            raise DatasetError("cannot stack an empty selection")
        images = np.stack([item.image for item in chosen])
        labels = np.array([item.label for item in chosen])
        return Tensor(images), Tensor(np.eye(2)[labels])

    def summary(self) -> str:
        counts = self.class_counts()
        synthetic = sum(item.is_synthetic for item in self.items)
        return f"{len(self)} items (normal={counts[0]}, abnormal={counts[1]}, synthetic={synthetic})"


# ==================== FOLDER INGESTION ====================

def _list_class_files(root: Path, name: str) -> list[Path]:
    folder = root / name
    if not folder.is_dir():
        raise BadPathError(f"missing class folder: {folder}")
    return sorted(p for p in folder.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_folder(root: str | Path, input_size: int = 224, num_workers: int | None = None) -> LabeledDataset:
    """
    Load ``root/normal`` and ``root/abnormal`` images.

    Files are processed in lexicographic order within each class (normal
    first); parallel decoding keeps that order. Unreadable files are skipped
    with a warning and listed in `dataset.skipped`.

    Args:
        root: Dataset root
        input_size: Side length images are bilinearly resized to
        num_workers: Decode threads (defaults to settings.NUM_WORKERS)

    Raises:
        BadPathError: Root or a class folder does not exist
        DatasetError: A class has no readable image
    """
    root = Path(root)
    if not root.is_dir():
        raise BadPathError(f"data directory not found: {root}")

    jobs = [(path, label) for label, name in enumerate(CLASS_NAMES) for path in _list_class_files(root, name)]
    logger.info(f"📦 Loading {len(jobs)} files from {root} (input size {input_size})")

    def _decode(job: tuple[Path, int]) -> tuple[Path, int, np.ndarray | None]:
        path, label = job
        try:
            return path, label, load_image(path, input_size)
        except DatasetError as e:
            logger.warning(f"⚠️ Skipping unreadable file: {e}")
            return path, label, None

    workers = num_workers or settings.NUM_WORKERS
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            decoded = list(pool.map(_decode, jobs))
    else:
        decoded = [_decode(job) for job in jobs]

    dataset = LabeledDataset(root=str(root))
    for path, label, image in decoded:
        if image is None:
            dataset.skipped.append(str(path))
        else:
            dataset.items.append(LabeledItem(image=image, label=label, source=str(path)))

    counts = dataset.class_counts()
    for label, name in enumerate(CLASS_NAMES):
        if counts[label] == 0:
            raise DatasetError(f"class '{name}' has no readable images under {root}")
    logger.info(f"📦 Loaded {dataset.summary()}, skipped {len(dataset.skipped)}")
    return dataset


# ==================== MANIFEST ====================

MANIFEST_COLUMNS = ["path", "label", "augmentation_tag", "split"]


def manifest_frame(parts: dict[str, LabeledDataset]) -> pd.DataFrame:
    """One row per item: path, label, augmentation_tag, split."""
    rows = [
        {"path": item.source, "label": item.label, "augmentation_tag": item.augmentation, "split": split}
        for split, dataset in parts.items()
        for item in dataset
    ]
    return pd.DataFrame(rows, columns=MANIFEST_COLUMNS)


def write_manifest(path: str | Path, parts: dict[str, LabeledDataset]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest_frame(parts).to_csv(path, index=False)
    logger.info(f"📦 Manifest written to {path}")
    return path
