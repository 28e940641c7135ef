"""Class balancing: augmentation of minority classes, subsampling of majority classes."""

import logging

from hybridcnn.core.errors import DatasetError
from hybridcnn.core.rng import Rng
from hybridcnn.data.dataset import CLASS_NAMES, LabeledDataset, LabeledItem
from hybridcnn.utils.imaging import add_gaussian_noise, hflip, rotate90, vflip

logger = logging.getLogger(__name__)

TRANSFORM_KINDS = ("hflip", "vflip", "rotate", "noise")
DEFAULT_NOISE_SIGMA = 0.02


def _synthesize(item: LabeledItem, rng: Rng, noise_sigma: float) -> tuple[str, object]:
    kind = TRANSFORM_KINDS[int(rng.integers(len(TRANSFORM_KINDS)))]
    if kind == "hflip":
        return "hflip", hflip(item.image)
    if kind == "vflip":
        return "vflip", vflip(item.image)
    if kind == "rotate":
        turns = int(rng.integers(1, 4))
        return f"rot{90 * turns}", rotate90(item.image, turns)
    return "noise", add_gaussian_noise(item.image, noise_sigma, rng)


def augment_to_target(
    dataset: LabeledDataset,
    per_class_target: int,
    rng: Rng,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
) -> LabeledDataset:
    """
    Grow every class to `per_class_target` items with synthetic samples.

    Each synthetic item picks an original of its class uniformly and one
    transform uniformly: horizontal flip, vertical flip, rotation by 90/180/270
    degrees, or clipped Gaussian noise. Synthetic items are appended after
    the existing ones, class by class.

    Raises:
        DatasetError: A class is empty or already exceeds the target
    """
    items = list(dataset.items)
    for label, name in enumerate(CLASS_NAMES):
        originals = [dataset[i] for i in dataset.indices_of(label, originals_only=True)]
        current = len(dataset.indices_of(label))
        if not originals:
            raise DatasetError(f"cannot augment empty class '{name}'")
        if per_class_target < current:
            raise DatasetError(
                f"class '{name}' already has {current} items, above target {per_class_target}"
            )
        for n in range(per_class_target - current):
            source = originals[int(rng.integers(len(originals)))]
            tag, image = _synthesize(source, rng, noise_sigma)
            items.append(LabeledItem(
                image=image,
                label=label,
                source=f"{source.source}#{tag}-{n}",
                augmentation=tag,
                origin=source.source,
            ))
        logger.info(f"📦 Class '{name}': {current} -> {per_class_target} ({per_class_target - current} synthetic)")
    return LabeledDataset(items=items, root=dataset.root, skipped=list(dataset.skipped))


def subsample_class(dataset: LabeledDataset, label: int, target: int, rng: Rng) -> LabeledDataset:
    """
    Keep a uniform random sample of `target` items of class `label`.

    Other classes are untouched and the surviving items keep their order.

    Raises:
        DatasetError: `target` exceeds the class size
    """
    members = dataset.indices_of(label)
    if target > len(members):
        raise DatasetError(
            f"cannot keep {target} items of class '{CLASS_NAMES[label]}', only {len(members)} available"
        )
    chosen = {members[i] for i in rng.choice(len(members), size=target, replace=False)}
    keep = [i for i in range(len(dataset)) if dataset[i].label != label or i in chosen]
    logger.info(f"📦 Subsampled class '{CLASS_NAMES[label]}': {len(members)} -> {target}")
    result = dataset.subset(keep)
    result.skipped = list(dataset.skipped)
    return result
