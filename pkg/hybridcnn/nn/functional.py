"""Activations, pooling, softmax and dense layers."""

import numpy as np

from hybridcnn.core.errors import ShapeError
from hybridcnn.core.tensor import Tensor, apply_op, elementwise, matmul, reduce
from hybridcnn.nn.params import DenseParams


def relu(x: Tensor) -> Tensor:
    return elementwise("max", x, 0.0)


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, evaluated without overflow for large |x|."""
    data = x.data
    positive = data >= 0
    exp_neg = np.exp(-np.abs(data))
    out = np.where(positive, 1.0 / (1.0 + exp_neg), exp_neg / (1.0 + exp_neg)).astype(data.dtype)
    return apply_op("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def maxpool2x2(x: Tensor) -> Tensor:
    """
    2x2 max pooling with stride 2.

    Raises:
        ShapeError: If H or W is odd
    """
    if x.ndim != 4:
        raise ShapeError(f"maxpool2x2 expects NCHW, got {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even spatial dims, got {h}x{w}")
    # (N, C, H/2, W/2, 4) with window order (0,0), (0,1), (1,0), (1,1)
    windows = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    winners = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, winners[..., None], axis=-1)[..., 0]

    def _backward(g: np.ndarray):
        routed = np.zeros_like(windows)
        np.put_along_axis(routed, winners[..., None], g[..., None], axis=-1)
        return (routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w),)

    return apply_op("maxpool2x2", out, (x,), _backward)


def upsample_nearest2x(x: Tensor) -> Tensor:
    """Nearest-neighbour 2x upsampling of an NCHW tensor."""
    n, c, h, w = x.shape
    out = x.data.repeat(2, axis=2).repeat(2, axis=3)
    return apply_op(
        "upsample_nearest2x", out, (x,),
        lambda g: (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),),
    )


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over each channel's plane: `[N, C, H, W] -> [N, C]`."""
    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool expects NCHW, got {x.shape}")
    return reduce("mean", x, axis=(2, 3))


def softmax(x: Tensor) -> Tensor:
    """Row-wise softmax of a `[N, K]` tensor."""
    data = x.data
    shifted = np.exp(data - data.max(axis=-1, keepdims=True))
    out = shifted / shifted.sum(axis=-1, keepdims=True)

    def _backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return apply_op("softmax", out, (x,), _backward)


def dense(x: Tensor, p: DenseParams) -> Tensor:
    """Affine map `x @ W + b` for `x` of shape `[N, in]`."""
    if x.ndim != 2 or x.shape[1] != p.weight.shape[0]:
        raise ShapeError(f"dense expects [N, {p.weight.shape[0]}], got {x.shape}")
    return matmul(x, p.weight) + p.bias
