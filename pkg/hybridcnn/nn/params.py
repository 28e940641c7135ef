"""Parameter containers for the neural operators."""

from dataclasses import dataclass
from typing import ClassVar

from hybridcnn.core.errors import ShapeError
from hybridcnn.core.tensor import Tensor


@dataclass
class ConvParams:
    """
    Filter bank of a same-padded, stride-1 convolution.

    `weight` is `[out_ch, in_ch, k, k]` with k = 3 (spatial) or 1 (pointwise).
    `bias` is `[out_ch]`, or None for cosine-normalized convolution.
    """

    TRAINABLE: ClassVar[tuple[str, ...]] = ("weight", "bias")
    BUFFERS: ClassVar[tuple[str, ...]] = ()

    weight: Tensor
    bias: Tensor | None = None

    def __post_init__(self):
        if self.weight.ndim != 4 or self.weight.shape[2] != self.weight.shape[3]:
            raise ShapeError(f"conv weight must be [out, in, k, k], got {self.weight.shape}")
        if self.weight.shape[2] not in (1, 3):
            raise ShapeError(f"only 3x3 and 1x1 kernels are supported, got {self.weight.shape[2]}")
        if self.bias is not None and self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(f"conv bias must be [{self.weight.shape[0]}], got {self.bias.shape}")

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel(self) -> int:
        return self.weight.shape[2]


@dataclass
class DscParams:
    """Depthwise `[in_ch,1,3,3]` + pointwise `[out_ch,in_ch,1,1]` + bias `[out_ch]`."""

    TRAINABLE: ClassVar[tuple[str, ...]] = ("depthwise", "pointwise", "bias")
    BUFFERS: ClassVar[tuple[str, ...]] = ()

    depthwise: Tensor
    pointwise: Tensor
    bias: Tensor

    def __post_init__(self):
        in_ch = self.depthwise.shape[0]
        if self.depthwise.shape != (in_ch, 1, 3, 3):
            raise ShapeError(f"depthwise kernel must be [in, 1, 3, 3], got {self.depthwise.shape}")
        if self.pointwise.ndim != 4 or self.pointwise.shape[1:] != (in_ch, 1, 1):
            raise ShapeError(f"pointwise kernel must be [out, {in_ch}, 1, 1], got {self.pointwise.shape}")
        if self.bias.shape != (self.pointwise.shape[0],):
            raise ShapeError(f"DSC bias must be [{self.pointwise.shape[0]}], got {self.bias.shape}")

    @property
    def in_channels(self) -> int:
        return self.depthwise.shape[0]

    @property
    def out_channels(self) -> int:
        return self.pointwise.shape[0]


@dataclass
class BatchNormParams:
    """
    Affine batch-norm parameters plus running statistics.

    Running statistics are replaced (never mutated) in training mode.
    """

    TRAINABLE: ClassVar[tuple[str, ...]] = ("gamma", "beta")
    BUFFERS: ClassVar[tuple[str, ...]] = ("running_mean", "running_var")

    gamma: Tensor
    beta: Tensor
    running_mean: Tensor
    running_var: Tensor
    momentum: float = 0.9
    epsilon: float = 1e-5

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]


@dataclass
class DenseParams:
    """Fully connected layer: `weight [in, out]`, `bias [out]`."""

    TRAINABLE: ClassVar[tuple[str, ...]] = ("weight", "bias")
    BUFFERS: ClassVar[tuple[str, ...]] = ()

    weight: Tensor
    bias: Tensor


LayerParams = ConvParams | DscParams | BatchNormParams | DenseParams
