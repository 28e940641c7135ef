"""Penultimate-layer feature extraction and the feature CSV table."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from hybridcnn.core.errors import BadPathError, ConfigError, DatasetError
from hybridcnn.core.tensor import Tensor, no_record
from hybridcnn.data.dataset import LabeledDataset
from hybridcnn.models.hybrid import HEAD_WIDTHS
from hybridcnn.network.hybrid import HybridCNN

logger = logging.getLogger(__name__)

FEATURE_LENGTH = HEAD_WIDTHS[-2]
FEATURE_COLUMNS = [f"f{i}" for i in range(FEATURE_LENGTH)]


@dataclass
class FeatureTable:
    """Rows of (128-d feature vector, label, source path)."""

    features: np.ndarray
    labels: np.ndarray
    paths: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != FEATURE_LENGTH:
            raise DatasetError(f"feature rows must have length {FEATURE_LENGTH}, got shape {self.features.shape}")
        if not (len(self.labels) == len(self.paths) == len(self.features)):
            raise DatasetError("features, labels and paths differ in length")
        if not np.all(np.isfinite(self.features)):
            raise DatasetError("feature table contains NaN or Inf")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices) -> "FeatureTable":
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureTable(self.features[indices], self.labels[indices], [self.paths[i] for i in indices])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.features, columns=FEATURE_COLUMNS)
        frame.insert(0, "path", self.paths)
        frame.insert(0, "label", self.labels)
        return frame

    def write_csv(self, path: str | Path) -> Path:
        """Header ``label,path,f0..f127``; floats written with full round-trip precision."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(f"💾 Wrote {len(self)} feature rows to {path}")
        return path

    @classmethod
    def read_csv(cls, path: str | Path) -> "FeatureTable":
        path = Path(path)
        if not path.is_file():
            raise BadPathError(f"feature table not found: {path}")
        frame = pd.read_csv(path, float_precision="round_trip")
        expected = ["label", "path", *FEATURE_COLUMNS]
        if list(frame.columns) != expected:
            raise DatasetError(f"{path}: header must be label,path,f0..f{FEATURE_LENGTH - 1}")
        return cls(
            features=frame[FEATURE_COLUMNS].to_numpy(dtype=np.float64),
            labels=frame["label"].to_numpy(dtype=np.int64),
            paths=frame["path"].astype(str).tolist(),
        )


def extract_features(model: HybridCNN, dataset: LabeledDataset) -> FeatureTable:
    """
    128-d post-ReLU activation of the third FC layer for every image.

    Images are passed one at a time in eval mode, so each row depends only on
    the weights and its own image.

    Raises:
        ConfigError: The head is not FC 1024 -> 512 -> 128 -> 2
    """
    if list(model.config.fc_widths) != HEAD_WIDTHS:
        raise ConfigError(f"feature extraction needs fc_widths {HEAD_WIDTHS}, got {model.config.fc_widths}")
    if len(dataset) == 0:
        raise DatasetError("cannot extract features from an empty dataset")
    rows = []
    with no_record():
        for item in dataset:
            _, taps = model.forward(Tensor(item.image[None], dtype=model.dtype), mode="eval")
            rows.append(taps.penultimate.data[0].astype(np.float64))
    logger.info(f"🧠 Extracted {len(rows)} feature rows")
    return FeatureTable(np.stack(rows), dataset.labels(), [item.source for item in dataset])
