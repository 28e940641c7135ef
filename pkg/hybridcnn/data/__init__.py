"""Dataset ingestion, balancing, splitting and batching."""

from hybridcnn.data.augmentation import augment_to_target, subsample_class
from hybridcnn.data.dataset import CLASS_NAMES, LabeledDataset, LabeledItem, load_folder, manifest_frame, write_manifest
from hybridcnn.data.splitting import batch_indices, batches, split

__all__ = [
    "CLASS_NAMES",
    "LabeledDataset",
    "LabeledItem",
    "load_folder",
    "manifest_frame",
    "write_manifest",
    "augment_to_target",
    "subsample_class",
    "split",
    "batches",
    "batch_indices",
]
