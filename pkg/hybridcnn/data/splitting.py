"""Deterministic stratified splits and mini-batching."""

import logging
from collections.abc import Iterator

import numpy as np

from hybridcnn.core.errors import DatasetError
from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import Tensor
from hybridcnn.data.dataset import CLASS_NAMES, LabeledDataset
from hybridcnn.models.dataset import SplitSpec

logger = logging.getLogger(__name__)


def _train_count(n: int, fraction: float) -> int:
    return min(max(int(round(fraction * n)), 1), n - 1)


def split(dataset: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """
    Split originals into train and test.

    With stratification each class contributes round(fraction * n) items
    to train. Synthetic items follow their original: they join train when it
    did, and are dropped with a warning when it landed in test, so the test
    side never holds synthetic items. Both sides keep dataset order.

    Raises:
        DatasetError: Fewer than 2 originals in a class
    """
    rng = Rng(spec.seed)
    originals = {c: dataset.indices_of(c, originals_only=True) for c in (0, 1)}
    for label, members in originals.items():
        if len(members) < 2:
            raise DatasetError(
                f"class '{CLASS_NAMES[label]}' needs at least 2 items to split, has {len(members)}"
            )

    train_idx: set[int] = set()
    if spec.stratified:
        for members in originals.values():
            order = rng.permutation(len(members))
            train_idx.update(members[i] for i in order[: _train_count(len(members), spec.train_fraction)])
    else:
        pool = originals[0] + originals[1]
        order = rng.permutation(len(pool))
        train_idx.update(pool[i] for i in order[: _train_count(len(pool), spec.train_fraction)])

    train_sources = {dataset[i].source for i in train_idx}
    train_keep, test_keep, dropped = [], [], 0
    for i, item in enumerate(dataset):
        if item.is_synthetic:
            if item.origin in train_sources:
                train_keep.append(i)
            else:
                dropped += 1
        elif i in train_idx:
            train_keep.append(i)
        else:
            test_keep.append(i)
    if dropped:
        logger.warning(f"⚠️ Dropped {dropped} synthetic items whose original is in the test split")

    train, test = dataset.subset(train_keep), dataset.subset(test_keep)
    logger.info(f"📦 Split: train {train.summary()} | test {test.summary()}")
    return train, test


def batch_indices(n: int, batch_size: int, shuffle: bool, rng: Rng | None = None) -> Iterator[np.ndarray]:
    """Index arrays of consecutive batches; the last partial batch is kept."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if shuffle:
        if rng is None:
            raise ValueError("shuffling needs an rng")
        order = rng.permutation(n)
    else:
        order = np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def batches(
    dataset: LabeledDataset,
    batch_size: int,
    shuffle: bool = False,
    rng: Rng | None = None,
) -> Iterator[tuple[Tensor, Tensor]]:
    """Yield (images `[N, 3, H, W]`, one-hot labels `[N, 2]`)."""
    for idx in batch_indices(len(dataset), batch_size, shuffle, rng):
        yield dataset.stack(idx)
