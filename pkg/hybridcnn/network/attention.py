"""Residual attention pre-processing layer (trunk and mask branches)."""

from dataclasses import dataclass, field

from hybridcnn.core.errors import ShapeError
from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import Tensor
from hybridcnn.nn import (
    BatchNormParams,
    ConvParams,
    batch_norm,
    conv2d,
    maxpool2x2,
    relu,
    sigmoid,
    upsample_nearest2x,
)
from hybridcnn.nn.init import kaiming_uniform, ones, zeros
from hybridcnn.nn.norm import Mode


@dataclass
class ResidualBlockParams:
    """Two 3x3 conv-BN stages with an additive skip."""

    conv1: ConvParams
    bn1: BatchNormParams
    conv2: ConvParams
    bn2: BatchNormParams


@dataclass
class AttentionParams:
    """
    Stem, trunk, mask and output projection of the attention layer.

    The stem lifts the RGB input to `width` channels; `project` maps the
    attended features back to 3 channels so every branch receives an
    image-shaped tensor.
    """

    stem_conv: ConvParams
    stem_bn: BatchNormParams
    trunk: list[ResidualBlockParams]
    mask_block: ResidualBlockParams
    mask_conv: ConvParams
    project: ConvParams
    width: int = field(init=False)

    def __post_init__(self):
        self.width = self.stem_conv.out_channels

    def named_layers(self) -> dict[str, ConvParams | BatchNormParams]:
        layers: dict[str, ConvParams | BatchNormParams] = {
            "stem.conv": self.stem_conv,
            "stem.bn": self.stem_bn,
        }
        for i, block in enumerate(self.trunk):
            layers.update(_block_layers(f"trunk.{i}", block))
        layers.update(_block_layers("mask.block", self.mask_block))
        layers["mask.conv"] = self.mask_conv
        layers["project"] = self.project
        return layers


def _block_layers(prefix: str, block: ResidualBlockParams) -> dict[str, ConvParams | BatchNormParams]:
    return {
        f"{prefix}.conv1": block.conv1,
        f"{prefix}.bn1": block.bn1,
        f"{prefix}.conv2": block.conv2,
        f"{prefix}.bn2": block.bn2,
    }


# ==================== INITIALIZATION ====================

def init_conv(in_ch: int, out_ch: int, k: int, rng: Rng) -> ConvParams:
    weight = kaiming_uniform((out_ch, in_ch, k, k), fan_in=in_ch * k * k, rng=rng)
    return ConvParams(weight=weight, bias=zeros((out_ch,)))


def init_bn(channels: int) -> BatchNormParams:
    return BatchNormParams(
        gamma=ones((channels,)),
        beta=zeros((channels,)),
        running_mean=zeros((channels,), trainable=False),
        running_var=ones((channels,), trainable=False),
    )


def _init_block(width: int, rng: Rng) -> ResidualBlockParams:
    return ResidualBlockParams(
        conv1=init_conv(width, width, 3, rng),
        bn1=init_bn(width),
        conv2=init_conv(width, width, 3, rng),
        bn2=init_bn(width),
    )


def init_attention(rng: Rng, width: int = 16, residual_blocks: int = 2) -> AttentionParams:
    """Fresh attention parameters for 3-channel input."""
    return AttentionParams(
        stem_conv=init_conv(3, width, 3, rng),
        stem_bn=init_bn(width),
        trunk=[_init_block(width, rng) for _ in range(residual_blocks)],
        mask_block=_init_block(width, rng),
        mask_conv=init_conv(width, width, 1, rng),
        project=init_conv(width, 3, 1, rng),
    )


# ==================== FORWARD ====================

def residual_block(x: Tensor, p: ResidualBlockParams, mode: Mode) -> Tensor:
    """x + relu(bn(conv(relu(bn(conv(x))))))"""
    h = relu(batch_norm(conv2d(x, p.conv1), p.bn1, mode))
    h = relu(batch_norm(conv2d(h, p.conv2), p.bn2, mode))
    return x + h


def attention_branches(x: Tensor, p: AttentionParams, mode: Mode) -> tuple[Tensor, Tensor]:
    """
    Trunk features T(x) and soft mask M(x) in (0, 1), both `[N, width, H, W]`.

    Raises:
        ShapeError: If H or W is odd
    """
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"attention expects [N, 3, H, W], got {x.shape}")
    if x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"attention needs even spatial dims, got {x.shape[2]}x{x.shape[3]}")

    stem = relu(batch_norm(conv2d(x, p.stem_conv), p.stem_bn, mode))

    trunk = stem
    for block in p.trunk:
        trunk = residual_block(trunk, block, mode)

    mask = maxpool2x2(stem)
    mask = residual_block(mask, p.mask_block, mode)
    mask = upsample_nearest2x(mask)
    mask = sigmoid(conv2d(mask, p.mask_conv))
    return trunk, mask


def attention_forward(x: Tensor, p: AttentionParams, mode: Mode = "eval") -> Tensor:
    """
    Residual attention: `project((1 + M) * T)`.

    Returns:
        Tensor `[N, 3, H, W]`, same spatial size as the input
    """
    trunk, mask = attention_branches(x, p, mode)
    return conv2d((mask + 1.0) * trunk, p.project)
