"""Hybrid three-branch CNN: attention, FN-1 (CNC), FN-2 (DSC), MFE and head."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np

from hybridcnn.core.errors import ConfigError, ShapeError
from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import Tensor, concat, no_record
from hybridcnn.models.hybrid import HEAD_WIDTHS, Branch, HybridModelConfig
from hybridcnn.network.attention import (
    AttentionParams,
    ResidualBlockParams,
    attention_forward,
    init_attention,
    init_bn,
    init_conv,
)
from hybridcnn.network.sfm import StatFeatureMaps, compute_sfm, mfe_block_input
from hybridcnn.nn import (
    BatchNormParams,
    ConvParams,
    DenseParams,
    DscParams,
    batch_norm,
    conv2d,
    cosine_norm_conv,
    dense,
    depthwise_separable_conv,
    global_avg_pool,
    maxpool2x2,
    relu,
    softmax,
)
from hybridcnn.nn.init import kaiming_uniform, unit_norm_filters, zeros
from hybridcnn.nn.norm import Mode
from hybridcnn.nn.params import LayerParams

logger = logging.getLogger(__name__)

NUM_BLOCKS = 4


@dataclass
class ForwardTaps:
    """
    Intermediate activations exposed by every forward pass.

    Attributes:
        attention: Attention output (or the raw input when attention is off)
        pre_activations: Per branch, the conv output of each block before BN
        blocks: Per branch, each block's pooled output
        sfms: Per branch, the SFMs of blocks 1-3 that feed MFE blocks 2-4
            (empty when MFE is disabled)
        concat: Channel concatenation of the enabled block-4 outputs
        penultimate: 128-d activation of the third FC layer
        logits: `[N, 2]` raw scores
    """

    attention: Tensor
    pre_activations: dict[str, list[Tensor]] = field(default_factory=dict)
    blocks: dict[str, list[Tensor]] = field(default_factory=dict)
    sfms: dict[str, list[StatFeatureMaps]] = field(default_factory=dict)
    concat: Tensor | None = None
    penultimate: Tensor | None = None
    logits: Tensor | None = None


# ==================== CONSTRUCTION ====================

def mfe_input_channels(config: HybridModelConfig, block: int) -> int:
    """Channels entering MFE block `block` (0-based)."""
    if block == 0:
        return 3
    feeders = int(config.use_cnc_branch) + int(config.use_dsc_branch)
    return 2 * (feeders + 1)


def _init_cnc(in_ch: int, out_ch: int, rng: Rng) -> ConvParams:
    return ConvParams(weight=unit_norm_filters((out_ch, in_ch, 3, 3), rng))


def _init_dsc(in_ch: int, out_ch: int, rng: Rng) -> DscParams:
    return DscParams(
        depthwise=kaiming_uniform((in_ch, 1, 3, 3), fan_in=9, rng=rng),
        pointwise=kaiming_uniform((out_ch, in_ch, 1, 1), fan_in=in_ch, rng=rng),
        bias=zeros((out_ch,)),
    )


def _init_dense(in_f: int, out_f: int, rng: Rng) -> DenseParams:
    return DenseParams(weight=kaiming_uniform((in_f, out_f), fan_in=in_f, rng=rng), bias=zeros((out_f,)))


def init_layers(config: HybridModelConfig) -> dict[str, LayerParams]:
    """
    Fresh parameters for `config`, keyed by dotted layer name.

    Initialization consumes one seeded stream in a fixed layer order, so the
    same config always yields bit-identical weights.
    """
    rng = Rng(config.seed)
    layers: dict[str, LayerParams] = {}

    if config.use_attention:
        attention = init_attention(rng, config.attention_width, config.attention_residual_blocks)
        for name, layer in attention.named_layers().items():
            layers[f"attention.{name}"] = layer

    for branch in config.enabled_branches:
        widths = config.widths(branch)
        for i, out_ch in enumerate(widths):
            in_ch = 3 if i == 0 else widths[i - 1]
            prefix = f"{branch}.block{i + 1}"
            if branch == "cnc":
                layers[f"{prefix}.conv"] = _init_cnc(in_ch, out_ch, rng)
            elif branch == "dsc":
                layers[f"{prefix}.conv"] = _init_dsc(in_ch, out_ch, rng)
            else:
                layers[f"{prefix}.conv"] = init_conv(mfe_input_channels(config, i), out_ch, 3, rng)
            layers[f"{prefix}.bn"] = init_bn(out_ch)

    in_f = config.concat_channels
    for i, out_f in enumerate(HEAD_WIDTHS):
        layers[f"head.fc{i + 1}"] = _init_dense(in_f, out_f, rng)
        in_f = out_f
    return layers


def _attention_from_layers(layers: dict[str, LayerParams], residual_blocks: int) -> AttentionParams:
    def block(prefix: str) -> ResidualBlockParams:
        return ResidualBlockParams(
            conv1=layers[f"{prefix}.conv1"],
            bn1=layers[f"{prefix}.bn1"],
            conv2=layers[f"{prefix}.conv2"],
            bn2=layers[f"{prefix}.bn2"],
        )

    return AttentionParams(
        stem_conv=layers["attention.stem.conv"],
        stem_bn=layers["attention.stem.bn"],
        trunk=[block(f"attention.trunk.{i}") for i in range(residual_blocks)],
        mask_block=block("attention.mask.block"),
        mask_conv=layers["attention.mask.conv"],
        project=layers["attention.project"],
    )


# ==================== MODEL ====================

class HybridCNN:
    """
    Parameters plus configuration of one hybrid network.

    Layers are stored by dotted name (``cnc.block1.conv``, ``head.fc3``...);
    `parameters()` flattens them to ``<layer>.<field>`` names, the same names
    used in checkpoints.

    Args:
        config: Architecture description
        layers: Existing parameters (e.g. from a checkpoint); fresh ones
            are initialized from `config.seed` when omitted
    """

    def __init__(self, config: HybridModelConfig, layers: dict[str, LayerParams] | None = None):
        if not config.enabled_branches:
            raise ConfigError("at least one branch must be enabled")
        self.config = config
        self.layers = layers if layers is not None else init_layers(config)
        self.attention: AttentionParams | None = (
            _attention_from_layers(self.layers, config.attention_residual_blocks)
            if config.use_attention else None
        )
        logger.debug(f"🧠 HybridCNN built: branches={config.enabled_branches}, params={self.param_count()}")

    # -------------------- parameters --------------------

    def parameters(self) -> dict[str, Tensor]:
        """Trainable tensors by flat name."""
        named: dict[str, Tensor] = {}
        for layer_name, layer in self.layers.items():
            for attr in type(layer).TRAINABLE:
                tensor = getattr(layer, attr)
                if tensor is not None:
                    named[f"{layer_name}.{attr}"] = tensor
        return named

    def buffers(self) -> dict[str, Tensor]:
        """BN running statistics by flat name."""
        named: dict[str, Tensor] = {}
        for layer_name, layer in self.layers.items():
            for attr in type(layer).BUFFERS:
                named[f"{layer_name}.{attr}"] = getattr(layer, attr)
        return named

    def state(self) -> dict[str, Tensor]:
        return {**self.parameters(), **self.buffers()}

    def load_state(self, tensors: dict[str, Tensor]) -> None:
        """
        Replace parameters and buffers by name.

        Raises:
            ShapeError: Unknown name or shape mismatch
        """
        for name, tensor in tensors.items():
            layer_name, _, attr = name.rpartition(".")
            layer = self.layers.get(layer_name)
            if layer is None or attr not in {f.name for f in fields(layer)}:
                raise ShapeError(f"unknown parameter '{name}'")
            current = getattr(layer, attr)
            if current is None or current.shape != tensor.shape:
                expected = None if current is None else current.shape
                raise ShapeError(f"parameter '{name}' has shape {tensor.shape}, expected {expected}")
            trainable = attr in type(layer).TRAINABLE
            setattr(layer, attr, Tensor(tensor.data, requires_grad=trainable, name=name, dtype=tensor.dtype))

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.parameters().values())).dtype

    def param_count(self) -> int:
        return int(sum(t.size for t in self.parameters().values()))

    def astype(self, dtype: str) -> "HybridCNN":
        """Copy of the model with every tensor cast to `dtype`."""
        clone = HybridCNN(self.config, init_layers(self.config))
        clone.load_state({
            name: Tensor(t.data.astype(dtype), dtype=dtype) for name, t in self.state().items()
        })
        return clone

    # -------------------- forward --------------------

    def forward(self, x: Tensor, mode: Mode = "eval") -> tuple[Tensor, ForwardTaps]:
        return hybrid_forward(x, self, mode)

    __call__ = forward


def _branch_block(model: HybridCNN, branch: Branch, i: int, x: Tensor, mode: Mode) -> tuple[Tensor, Tensor]:
    prefix = f"{branch}.block{i + 1}"
    layer = model.layers[f"{prefix}.conv"]
    if branch == "cnc":
        pre = cosine_norm_conv(x, layer)
    elif branch == "dsc":
        pre = depthwise_separable_conv(x, layer)
    else:
        pre = conv2d(x, layer)
    out = maxpool2x2(relu(batch_norm(pre, model.layers[f"{prefix}.bn"], mode)))
    return pre, out


def hybrid_forward(x: Tensor, model: HybridCNN, mode: Mode = "eval") -> tuple[Tensor, ForwardTaps]:
    """
    Full forward pass.

    Attention (if enabled) feeds FN-1, FN-2 and MFE block 1. MFE blocks 2-4
    take the SFMs of the previous block outputs of every enabled branch. The
    block-4 outputs are concatenated, globally average-pooled and sent
    through FC 1024 -> 512 -> 128 -> 2.

    Args:
        x: Images `[N, 3, S, S]` with S == config.input_size
        model: Network parameters
        mode: ``train`` uses batch statistics in BN and updates running stats

    Returns:
        (logits `[N, 2]`, taps)

    Raises:
        ShapeError: Wrong input shape
        ConfigError: No branch enabled
    """
    config = model.config
    size = config.input_size
    if x.ndim != 4 or x.shape[1:] != (3, size, size):
        raise ShapeError(f"hybrid model expects [N, 3, {size}, {size}], got {x.shape}")
    branches = config.enabled_branches
    if not branches:
        raise ConfigError("at least one branch must be enabled")

    h = attention_forward(x, model.attention, mode) if model.attention is not None else x
    taps = ForwardTaps(attention=h)
    for branch in branches:
        taps.pre_activations[branch] = []
        taps.blocks[branch] = []
        if config.use_mfe_branch:
            taps.sfms[branch] = []

    inputs: dict[str, Tensor] = {b: h for b in branches}
    for i in range(NUM_BLOCKS):
        for branch in branches:
            pre, out = _branch_block(model, branch, i, inputs[branch], mode)
            taps.pre_activations[branch].append(pre)
            taps.blocks[branch].append(out)
            inputs[branch] = out

        if i + 1 < NUM_BLOCKS:
            assert len({taps.blocks[b][i].shape[2:] for b in branches}) == 1, "branch misalignment"
            if config.use_mfe_branch:
                sfm = {b: compute_sfm(taps.blocks[b][i]) for b in branches}
                for b in branches:
                    taps.sfms[b].append(sfm[b])
                inputs["mfe"] = mfe_block_input(sfm.get("cnc"), sfm.get("dsc"), sfm["mfe"])

    taps.concat = concat([taps.blocks[b][-1] for b in branches], axis=1)
    features = global_avg_pool(taps.concat)
    for i in range(1, len(HEAD_WIDTHS)):
        features = relu(dense(features, model.layers[f"head.fc{i}"]))
    taps.penultimate = features
    taps.logits = dense(features, model.layers[f"head.fc{len(HEAD_WIDTHS)}"])
    return taps.logits, taps


def predict_proba(model: HybridCNN, images: np.ndarray) -> np.ndarray:
    """Softmax probabilities `[N, 2]` in eval mode, no recording."""
    with no_record():
        logits, _ = model.forward(Tensor(images, dtype=model.dtype), mode="eval")
        return softmax(logits).numpy()
