"""Batch normalization."""

from typing import Literal

import numpy as np

from hybridcnn.core.errors import ShapeError
from hybridcnn.core.tensor import Tensor, apply_op
from hybridcnn.nn.params import BatchNormParams

Mode = Literal["train", "eval"]

_AXES = (0, 2, 3)


def _per_channel(v: np.ndarray) -> np.ndarray:
    return v.reshape(1, -1, 1, 1)


def batch_norm(x: Tensor, p: BatchNormParams, mode: Mode) -> Tensor:
    """
    Normalize each channel over (N, H, W).

    In ``train`` mode batch statistics (population variance) are used and the
    running statistics on `p` are replaced by
    ``momentum * running + (1 - momentum) * batch``. In ``eval`` mode the
    running statistics are used and `p` is left untouched.

    Raises:
        ShapeError: Channel mismatch or empty batch
    """
    if x.ndim != 4 or x.shape[1] != p.channels:
        raise ShapeError(f"batch_norm expects [N, {p.channels}, H, W], got {x.shape}")
    if x.shape[0] == 0:
        raise ShapeError("batch_norm on a batch of size 0")

    data = x.data
    gamma = _per_channel(p.gamma.data)
    beta = _per_channel(p.beta.data)

    if mode == "train":
        mean = data.mean(axis=_AXES, keepdims=True)
        centered = data - mean
        var = (centered * centered).mean(axis=_AXES, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + p.epsilon)
        x_hat = centered * inv_std
        count = data.size // data.shape[1]

        def _backward(g: np.ndarray):
            d_gamma = (g * x_hat).sum(axis=_AXES)
            d_beta = g.sum(axis=_AXES)
            d_xhat = g * gamma
            d_x = inv_std / count * (
                count * d_xhat
                - d_xhat.sum(axis=_AXES, keepdims=True)
                - x_hat * (d_xhat * x_hat).sum(axis=_AXES, keepdims=True)
            )
            return d_x, d_gamma, d_beta

        out = gamma * x_hat + beta
        result = apply_op("batch_norm", out, (x, p.gamma, p.beta), _backward)

        m = p.momentum
        p.running_mean = Tensor._wrap(
            (m * p.running_mean.data + (1 - m) * mean.reshape(-1)).astype(p.running_mean.dtype)
        )
        p.running_var = Tensor._wrap(
            (m * p.running_var.data + (1 - m) * var.reshape(-1)).astype(p.running_var.dtype)
        )
        return result

    if mode == "eval":
        inv_std = 1.0 / np.sqrt(_per_channel(p.running_var.data) + p.epsilon)
        x_hat = (data - _per_channel(p.running_mean.data)) * inv_std

        def _backward_eval(g: np.ndarray):
            return g * gamma * inv_std, (g * x_hat).sum(axis=_AXES), g.sum(axis=_AXES)

        return apply_op("batch_norm", gamma * x_hat + beta, (x, p.gamma, p.beta), _backward_eval)

    raise ValueError(f"Unknown batch_norm mode: {mode}")
