"""Differentiable neural operators."""

from hybridcnn.nn.conv import conv2d, cosine_norm_conv, depthwise_conv2d, depthwise_separable_conv
from hybridcnn.nn.functional import (
    dense,
    global_avg_pool,
    maxpool2x2,
    relu,
    sigmoid,
    softmax,
    upsample_nearest2x,
)
from hybridcnn.nn.loss import softmax_cross_entropy
from hybridcnn.nn.norm import batch_norm
from hybridcnn.nn.params import BatchNormParams, ConvParams, DenseParams, DscParams

__all__ = [
    # Convolutions
    "conv2d",
    "cosine_norm_conv",
    "depthwise_conv2d",
    "depthwise_separable_conv",
    # Normalization
    "batch_norm",
    # Activations / pools / head
    "relu",
    "sigmoid",
    "maxpool2x2",
    "upsample_nearest2x",
    "global_avg_pool",
    "softmax",
    "dense",
    # Loss
    "softmax_cross_entropy",
    # Parameter containers
    "ConvParams",
    "DscParams",
    "BatchNormParams",
    "DenseParams",
]
