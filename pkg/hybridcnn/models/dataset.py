"""Dataset split and augmentation settings."""

from pydantic import BaseModel, Field


class SplitSpec(BaseModel):
    """Stratified train/test split."""

    train_fraction: float = Field(0.8, gt=0.0, lt=1.0, description="Share of each class kept for training")
    seed: int = Field(42, ge=0, description="Split seed")
    stratified: bool = Field(True, description="Split each class separately")


class AugmentationConfig(BaseModel):
    """Class balancing by augmentation (minority) and subsampling (majority)."""

    per_class_target: int | None = Field(
        None, gt=0,
        description="Grow every training class to this many items with synthetic samples",
    )
    subsample_normal: int | None = Field(
        None, gt=0,
        description="Randomly keep this many normal images before splitting",
    )
    noise_sigma: float = Field(0.02, ge=0.0, description="Gaussian noise std in [0,1] pixel units")
    seed: int = Field(42, ge=0)
