"""SGD training loop."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from hybridcnn.core.errors import DatasetError, NonFiniteError, NonFiniteLossError, ShapeError
from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import Tape, Tensor, backward
from hybridcnn.data.dataset import LabeledDataset
from hybridcnn.data.splitting import batch_indices, split
from hybridcnn.models.dataset import SplitSpec
from hybridcnn.models.training import EpochRecord, TrainConfig
from hybridcnn.network.hybrid import HybridCNN
from hybridcnn.nn import softmax, softmax_cross_entropy
from hybridcnn.services.checkpoints import save_checkpoint
from hybridcnn.services.evaluator import predict_dataset
from hybridcnn.services.metrics import DECISION_THRESHOLD, classification_scores

logger = logging.getLogger(__name__)


def sgd_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], lr: float) -> dict[str, Tensor]:
    """
    Plain SGD update `p - lr * g` (no momentum, no weight decay).

    Returns:
        New tensors under the same names; inputs are not modified

    Raises:
        ShapeError: Missing gradient or shape mismatch
    """
    updated: dict[str, Tensor] = {}
    for name, p in params.items():
        if name not in grads:
            raise ShapeError(f"no gradient for parameter '{name}'")
        g = np.asarray(grads[name])
        if g.shape != p.shape:
            raise ShapeError(f"gradient for '{name}' has shape {g.shape}, parameter has {p.shape}")
        data = p.data if lr == 0 else p.data - p.dtype.type(lr) * g.astype(p.dtype)
        updated[name] = Tensor(data, requires_grad=True, name=name, dtype=p.dtype)
    return updated


@dataclass
class TrainResult:
    model: HybridCNN
    curves: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    best_accuracy: float | None = None
    checkpoint: Path | None = None
    best_checkpoint: Path | None = None


def _epoch_scores(labels: np.ndarray, scores: np.ndarray) -> dict[str, float]:
    return classification_scores(labels, (scores >= DECISION_THRESHOLD).astype(np.int64))


def _validation_split(dataset: LabeledDataset, cfg: TrainConfig) -> tuple[LabeledDataset, LabeledDataset | None]:
    if cfg.validation_fraction <= 0:
        return dataset, None
    try:
        train, val = split(dataset, SplitSpec(train_fraction=1.0 - cfg.validation_fraction, seed=cfg.seed))
    except DatasetError as e:
        logger.warning(f"⚠️ No validation split ({e}); curves use training data only")
        return dataset, None
    return train, val


def best_checkpoint_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.best{path.suffix}")


def train(model: HybridCNN, dataset: LabeledDataset, cfg: TrainConfig) -> TrainResult:
    """
    Train `model` in place with mini-batch SGD on softmax cross-entropy.

    Each epoch shuffles with a stream derived from (seed, epoch), so two runs
    with the same seed produce identical curves and weights. A stratified
    share of `dataset` (``cfg.validation_fraction``) is held out for the
    validation columns of the curves; the checkpoint at
    ``<stem>.best<suffix>`` tracks the best validation accuracy (training
    accuracy when there is no validation split).

    Raises:
        DatasetError: Empty training set
        NonFiniteLossError: NaN/Inf during a step, with the batch's sources
    """
    if len(dataset) == 0:
        raise DatasetError("training set is empty")
    train_set, val_set = _validation_split(dataset, cfg)
    rng = Rng(cfg.seed)
    result = TrainResult(model=model)
    labels_all = train_set.labels()

    logger.info(
        f"🏋️ Training on {train_set.summary()} for {cfg.epochs} epochs "
        f"(lr={cfg.learning_rate}, batch={cfg.batch_size}, seed={cfg.seed})"
    )
    epochs = tqdm(range(1, cfg.epochs + 1), desc="epochs", unit="epoch", leave=False)
    for epoch in epochs:
        total_loss = 0.0
        seen_labels, seen_scores = [], []
        for batch_index, idx in enumerate(batch_indices(len(train_set), cfg.batch_size, True, rng.derive(epoch))):
            images, onehot = train_set.stack(idx)
            params = model.parameters()
            try:
                with Tape() as tape:
                    logits, _ = model.forward(images, mode="train")
                    loss = softmax_cross_entropy(logits, onehot)
                grads = backward(tape, loss).for_parameters(params)
                if not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise NonFiniteError("backward", "non-finite gradient")
            except NonFiniteError as e:
                sources = [train_set[i].source for i in idx]
                logger.error(f"❌ {e} at epoch {epoch}, batch {batch_index}")
                raise NonFiniteLossError(epoch, batch_index, sources) from e
            model.load_state(sgd_step(params, grads, cfg.learning_rate))

            probs = softmax(logits).data
            total_loss += loss.item() * len(idx)
            seen_labels.append(labels_all[idx])
            seen_scores.append(probs[:, 1])

        scores = _epoch_scores(np.concatenate(seen_labels), np.concatenate(seen_scores))
        record = EpochRecord(
            epoch=epoch,
            loss=total_loss / len(train_set),
            acc=scores["accuracy"],
            pr=scores["precision"],
            re=scores["recall"],
        )
        if val_set is not None and epoch % cfg.eval_every == 0:
            probs, val_loss = predict_dataset(model, val_set, cfg.batch_size)
            val_scores = _epoch_scores(val_set.labels(), probs[:, 1])
            record.val_loss = val_loss
            record.val_acc = val_scores["accuracy"]
            record.val_pr = val_scores["precision"]
            record.val_re = val_scores["recall"]
        result.curves.append(record)
        epochs.set_postfix(loss=f"{record.loss:.4f}", acc=f"{record.acc:.3f}")
        logger.debug(f"🏋️ epoch {epoch}: {record.model_dump(exclude_none=True)}")

        tracked = record.val_acc if val_set is not None else record.acc
        if tracked is not None and (result.best_accuracy is None or tracked > result.best_accuracy):
            result.best_accuracy = tracked
            result.best_epoch = epoch
            if cfg.checkpoint_path:
                result.best_checkpoint = save_checkpoint(model, best_checkpoint_path(cfg.checkpoint_path))

    if cfg.checkpoint_path:
        result.checkpoint = save_checkpoint(model, cfg.checkpoint_path)
    last = result.curves[-1]
    logger.info(f"🏋️ Done: loss={last.loss:.4f} acc={last.acc:.3f} best_epoch={result.best_epoch}")
    return result
