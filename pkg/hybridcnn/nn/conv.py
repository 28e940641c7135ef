"""Standard, cosine-normalized and depthwise-separable convolution.

All convolutions here are stride 1 with zero "same" padding (k // 2), so
H x W is preserved. Forward passes lower the input to patch columns
(im2col) and use a matrix product; backward passes fold column gradients
back onto the padded input (col2im).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hybridcnn.core.errors import ShapeError
from hybridcnn.core.tensor import Tensor, apply_op
from hybridcnn.nn.params import ConvParams, DscParams

CNC_EPSILON = 1e-8


# ==================== IM2COL ====================

def _windows(x: np.ndarray, k: int) -> np.ndarray:
    """Zero-padded k x k windows, shape (N, C, H, W, k, k)."""
    pad = k // 2
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    return sliding_window_view(x, (k, k), axis=(2, 3))


def im2col(x: np.ndarray, k: int) -> np.ndarray:
    """
    Lower an NCHW array to patch rows.

    Returns:
        Array (N*H*W, C*k*k); row order is (n, h, w), column order (c, i, j)
    """
    n, c, h, w = x.shape
    return _windows(x, k).transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * k * k)


def col2im(cols: np.ndarray, x_shape: tuple[int, ...], k: int) -> np.ndarray:
    """Accumulate patch-row gradients back into an NCHW array."""
    n, c, h, w = x_shape
    pad = k // 2
    blocks = cols.reshape(n, h, w, c, k, k).transpose(0, 3, 4, 5, 1, 2)
    padded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            padded[:, :, i:i + h, j:j + w] += blocks[:, :, i, j]
    return padded[:, :, pad:pad + h, pad:pad + w]


def _check_input(x: Tensor, in_channels: int, op: str) -> None:
    if x.ndim != 4:
        raise ShapeError(f"{op} expects an NCHW tensor, got shape {x.shape}")
    if x.shape[1] != in_channels:
        raise ShapeError(f"{op}: input has {x.shape[1]} channels, filters expect {in_channels}")


def _to_nchw(rows: np.ndarray, n: int, h: int, w: int) -> np.ndarray:
    return rows.reshape(n, h, w, -1).transpose(0, 3, 1, 2)


def _to_rows(g: np.ndarray) -> np.ndarray:
    return g.transpose(0, 2, 3, 1).reshape(-1, g.shape[1])


# ==================== STANDARD CONV ====================

def conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """
    Cross-correlation with zero same-padding and stride 1.

    Args:
        x: Input `[N, C, H, W]`
        p: Filters `[out, C, k, k]` and optional bias

    Returns:
        Output `[N, out, H, W]`

    Raises:
        ShapeError: Channel mismatch
    """
    _check_input(x, p.in_channels, "conv2d")
    n, _, h, w = x.shape
    k = p.kernel
    cols = im2col(x.data, k)
    w_mat = p.weight.data.reshape(p.out_channels, -1)
    rows = cols @ w_mat.T
    if p.bias is not None:
        rows = rows + p.bias.data
    out = _to_nchw(rows, n, h, w)

    def _backward(g: np.ndarray):
        g_rows = _to_rows(g)
        d_weight = (g_rows.T @ cols).reshape(p.weight.shape)
        d_x = col2im(g_rows @ w_mat, x.shape, k)
        if p.bias is None:
            return d_x, d_weight
        return d_x, d_weight, g_rows.sum(axis=0)

    inputs = (x, p.weight) if p.bias is None else (x, p.weight, p.bias)
    return apply_op("conv2d", out, inputs, _backward)


# ==================== COSINE-NORMALIZED CONV ====================

def cosine_norm_conv(x: Tensor, p: ConvParams) -> Tensor:
    """
    Convolution with the dot product replaced by cosine similarity.

    For each output location with patch vector x̂ (all input channels of the
    3x3 window) and flattened filter w:

        out = (w · x̂) / max(|w| |x̂|, 1e-8)

    so every pre-activation lies in [-1, 1]. No bias is applied.
    """
    _check_input(x, p.in_channels, "cosine_norm_conv")
    if p.bias is not None:
        raise ShapeError("cosine_norm_conv takes no bias")
    n, _, h, w = x.shape
    k = p.kernel
    cols = im2col(x.data, k)                         # (M, D)
    w_mat = p.weight.data.reshape(p.out_channels, -1)  # (O, D)

    dots = cols @ w_mat.T                            # (M, O)
    x_norm = np.sqrt((cols * cols).sum(axis=1, keepdims=True))   # (M, 1)
    w_norm = np.sqrt((w_mat * w_mat).sum(axis=1))[None, :]       # (1, O)
    product = x_norm * w_norm
    active = product > CNC_EPSILON
    denom = np.where(active, product, CNC_EPSILON)
    cosine = dots / denom
    out = _to_nchw(cosine, n, h, w)

    def _backward(g: np.ndarray):
        g_rows = _to_rows(g)
        scaled = g_rows / denom
        # on a clamped (all-zero) patch d_cols is g @ w / CNC_EPSILON: finite, up to ~1e8 |g|
        # quotient-rule correction only where the norm product is not clamped
        corr = np.where(active, g_rows * cosine, 0.0)
        safe_x = np.where(x_norm > 0, x_norm * x_norm, 1.0)
        safe_w = np.where(w_norm > 0, w_norm * w_norm, 1.0)
        d_cols = scaled @ w_mat - corr.sum(axis=1, keepdims=True) * cols / safe_x
        d_w = scaled.T @ cols - corr.sum(axis=0)[:, None] * w_mat / safe_w.T
        return col2im(d_cols, x.shape, k), d_w.reshape(p.weight.shape)

    return apply_op("cosine_norm_conv", out, (x, p.weight), _backward)


# ==================== DEPTHWISE SEPARABLE CONV ====================

def depthwise_conv2d(x: Tensor, kernels: Tensor) -> Tensor:
    """Per-channel 3x3 same-padded convolution; `kernels` is `[C, 1, 3, 3]`."""
    _check_input(x, kernels.shape[0], "depthwise_conv2d")
    k = kernels.shape[-1]
    windows = _windows(x.data, k)                    # (N, C, H, W, k, k)
    kern = kernels.data[:, 0]                        # (C, k, k)
    out = np.einsum("nchwij,cij->nchw", windows, kern)

    def _backward(g: np.ndarray):
        d_kern = np.einsum("nchw,nchwij->cij", g, windows)[:, None]
        n, c, h, w = x.shape
        pad = k // 2
        padded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=g.dtype)
        for i in range(k):
            for j in range(k):
                padded[:, :, i:i + h, j:j + w] += g * kern[None, :, i, j, None, None]
        return padded[:, :, pad:pad + h, pad:pad + w], d_kern

    return apply_op("depthwise_conv2d", out, (x, kernels), _backward)


def depthwise_separable_conv(x: Tensor, p: DscParams) -> Tensor:
    """
    Depthwise 3x3 per channel, then 1x1 pointwise channel mixing plus bias.

    Raises:
        ShapeError: Channel mismatch
    """
    _check_input(x, p.in_channels, "depthwise_separable_conv")
    spatial = depthwise_conv2d(x, p.depthwise)
    return conv2d(spatial, ConvParams(weight=p.pointwise, bias=p.bias))
