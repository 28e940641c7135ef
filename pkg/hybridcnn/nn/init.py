"""Weight initializers."""

import numpy as np

from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import Tensor


def kaiming_uniform(shape: tuple[int, ...], fan_in: int, rng: Rng, name: str | None = None) -> Tensor:
    """Uniform(-b, b) with b = sqrt(6 / fan_in)."""
    bound = np.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def unit_norm_filters(shape: tuple[int, ...], rng: Rng, name: str | None = None) -> Tensor:
    """Random filter directions, each output filter scaled to unit L2 norm."""
    raw = rng.normal(size=shape)
    norms = np.sqrt((raw.reshape(shape[0], -1) ** 2).sum(axis=1)).reshape((shape[0],) + (1,) * (len(shape) - 1))
    return Tensor(raw / norms, requires_grad=True, name=name)


def zeros(shape: tuple[int, ...], trainable: bool = True, name: str | None = None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=trainable, name=name)


def ones(shape: tuple[int, ...], trainable: bool = True, name: str | None = None) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=trainable, name=name)
