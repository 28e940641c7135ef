"""Exception hierarchy shared by the library and the CLI."""


class HybridCNNError(Exception):
    """Base error. `kind` is the stable tag printed by the CLI."""

    kind: str = "error"
    exit_code: int = 2


# ==================== TENSOR ENGINE ====================

class ShapeError(HybridCNNError, ValueError):
    kind = "shape"


class NonFiniteError(HybridCNNError, FloatingPointError):
    """An operation produced NaN or Inf."""

    kind = "non_finite"

    def __init__(self, op: str, detail: str = ""):
        self.op = op
        message = f"operation '{op}' produced non-finite values"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class TensorDivisionError(HybridCNNError, ZeroDivisionError):
    kind = "division_by_zero"


class TapeError(HybridCNNError, RuntimeError):
    kind = "tape"


class LabelError(HybridCNNError, ValueError):
    kind = "labels"


# ==================== CONFIG / DATA ====================

class ConfigError(HybridCNNError, ValueError):
    kind = "bad_config"
    exit_code = 1


class UsageError(HybridCNNError):
    kind = "usage"
    exit_code = 1


class DatasetError(HybridCNNError):
    kind = "dataset"


class BadPathError(HybridCNNError, FileNotFoundError):
    kind = "bad_path"
    exit_code = 1


# ==================== CHECKPOINTS ====================

class CheckpointError(HybridCNNError):
    kind = "checkpoint"


class BadMagicError(CheckpointError):
    kind = "bad_magic"


class VersionMismatchError(CheckpointError):
    kind = "version_mismatch"


class TruncatedCheckpointError(CheckpointError):
    kind = "truncated"


# ==================== TRAINING / VERIFICATION ====================

class NonFiniteLossError(HybridCNNError):
    """Training loss became NaN/Inf; carries the offending batch."""

    kind = "nan_abort"

    def __init__(self, epoch: int, batch_index: int, sources: list[str]):
        self.epoch = epoch
        self.batch_index = batch_index
        self.sources = sources
        preview = ", ".join(sources[:4])
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch_index} ({len(sources)} items: {preview})"
        )


class GradcheckFailure(HybridCNNError):
    kind = "gradcheck"
    exit_code = 3


class NotFittedError(HybridCNNError, AttributeError):
    kind = "not_fitted"
