"""Configurations of the classical classifiers trained on CNN features."""

from typing import Literal

from pydantic import BaseModel, Field


class ForestConfig(BaseModel):
    """Random forest: 100 Gini trees, sqrt feature sampling, unlimited depth."""

    n_estimators: int = Field(100, gt=0)
    criterion: Literal["gini"] = "gini"
    max_features: Literal["sqrt"] | int = Field("sqrt", description="Features examined per split")
    max_depth: int | None = Field(None, gt=0, description="None grows trees until leaves are pure")
    bootstrap: bool = True
    seed: int = Field(42, ge=0)
    n_jobs: int = Field(1, gt=0, description="Trees fitted concurrently")


class KnnConfig(BaseModel):
    """Brute-force Euclidean k-nearest neighbours."""

    n_neighbors: int = Field(5, gt=0)


class HingeConfig(BaseModel):
    """Linear separator trained by SGD on the L2-regularized hinge loss."""

    alpha: float = Field(1e-4, ge=0.0, description="L2 regularization strength")
    learning_rate: float = Field(0.01, gt=0.0)
    epochs: int = Field(1000, gt=0)
    seed: int = Field(42, ge=0)
