"""Training configuration and per-epoch records."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class TrainConfig(BaseModel):
    """SGD training protocol (defaults: SGD, lr 0.001, batch 16, 100 epochs)."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "optimizer": "sgd",
                "learning_rate": 0.001,
                "epochs": 100,
                "batch_size": 16,
                "seed": 42,
                "checkpoint_path": "model.ckpt",
            }
        }
    )

    optimizer: Literal["sgd"] = Field("sgd", description="Plain SGD: no momentum, no weight decay")
    learning_rate: float = Field(0.001, ge=0.0, description="Step size")
    epochs: int = Field(100, gt=0, description="Passes over the training set")
    batch_size: int = Field(16, gt=0, description="Images per step")
    seed: int = Field(42, ge=0, description="Shuffling / validation-split seed")
    checkpoint_path: Optional[str] = Field(None, description="Where the final and best checkpoints go")
    eval_every: int = Field(1, gt=0, description="Validate every N epochs")
    validation_fraction: float = Field(
        0.1, ge=0.0, lt=1.0,
        description="Stratified share of the training set held out for validation curves",
    )


class EpochRecord(BaseModel):
    """One row of the training curves."""

    epoch: int
    loss: float
    acc: float
    pr: float
    re: float
    val_loss: Optional[float] = None
    val_acc: Optional[float] = None
    val_pr: Optional[float] = None
    val_re: Optional[float] = None
