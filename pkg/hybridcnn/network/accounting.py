"""Analytic parameter and FLOP accounting.

Conventions:
    * params: trainable scalars (conv/DSC weights and biases, BN gamma/beta,
      dense weights and biases). BN running statistics are not counted.
    * FLOPs: 2 x multiply-accumulates of conv, DSC and dense layers at the
      configured input size. Cosine normalization, BN, activations, pooling
      and SFMs are excluded.
    * Conv-layer census: every conv counts once, a DSC layer (depthwise +
      pointwise) counts once, 1x1 convs of the attention layer count.
"""

from typing import NamedTuple

from hybridcnn.models.hybrid import HEAD_WIDTHS, HybridModelConfig, ModelCost
from hybridcnn.network.hybrid import NUM_BLOCKS, mfe_input_channels


class LayerCost(NamedTuple):
    params: int
    flops: int


class AblationRow(NamedTuple):
    """One toggle combination of the reference ablation table with its reference cost."""

    use_attention: bool
    use_dsc_branch: bool
    use_mfe_branch: bool
    use_cnc_branch: bool
    params_millions: float
    flops_giga: float

    @property
    def label(self) -> str:
        parts = [
            name for name, on in (
                ("attention", self.use_attention),
                ("dsc", self.use_dsc_branch),
                ("mfe", self.use_mfe_branch),
                ("cnc", self.use_cnc_branch),
            ) if on
        ]
        return "+".join(parts)

    def apply(self, config: HybridModelConfig) -> HybridModelConfig:
        return config.model_copy(update={
            "use_attention": self.use_attention,
            "use_dsc_branch": self.use_dsc_branch,
            "use_mfe_branch": self.use_mfe_branch,
            "use_cnc_branch": self.use_cnc_branch,
        })


ABLATION_ROWS: tuple[AblationRow, ...] = (
    AblationRow(True, True, True, True, 1.94, 14.0),
    AblationRow(False, True, True, True, 1.58, 11.0),
    AblationRow(True, True, False, True, 1.32, 5.37),
    AblationRow(True, False, False, True, 0.99, 4.9),
    AblationRow(True, True, False, False, 0.69, 1.78),
    AblationRow(False, True, False, True, 1.21, 3.16),
    AblationRow(False, False, False, True, 0.96, 2.81),
    AblationRow(False, True, False, False, 0.64, 0.36),
)


def reference_row(config: HybridModelConfig) -> AblationRow | None:
    """Reference row matching the config's toggles, if any."""
    for row in ABLATION_ROWS:
        if row[:4] == config.toggles:
            return row
    return None


# ==================== LAYER COSTS ====================

def conv_cost(in_ch: int, out_ch: int, kernel: int, height: int, width: int, bias: bool = True) -> LayerCost:
    """Standard (or cosine-normalized, with bias=False) convolution."""
    weights = in_ch * out_ch * kernel * kernel
    return LayerCost(weights + (out_ch if bias else 0), 2 * weights * height * width)


def dsc_cost(in_ch: int, out_ch: int, height: int, width: int) -> LayerCost:
    """Depthwise 3x3 + pointwise 1x1 + bias."""
    macs = (in_ch * 9 + in_ch * out_ch) * height * width
    return LayerCost(in_ch * 9 + in_ch * out_ch + out_ch, 2 * macs)


def bn_cost(channels: int) -> LayerCost:
    return LayerCost(2 * channels, 0)


def dense_cost(in_f: int, out_f: int) -> LayerCost:
    return LayerCost(in_f * out_f + out_f, 2 * in_f * out_f)


# ==================== MODEL COST ====================

def _attention_costs(config: HybridModelConfig) -> tuple[LayerCost, int]:
    s = config.input_size
    w = config.attention_width
    costs = [conv_cost(3, w, 3, s, s), bn_cost(w)]
    block_full = [conv_cost(w, w, 3, s, s), bn_cost(w)] * 2
    block_half = [conv_cost(w, w, 3, s // 2, s // 2), bn_cost(w)] * 2
    costs += block_full * config.attention_residual_blocks
    costs += block_half
    costs += [conv_cost(w, w, 1, s, s), conv_cost(w, 3, 1, s, s)]
    convs = 1 + 2 * config.attention_residual_blocks + 2 + 2
    return _total(costs), convs


def _branch_costs(config: HybridModelConfig, branch: str) -> LayerCost:
    costs: list[LayerCost] = []
    widths = config.widths(branch)
    for i, out_ch in enumerate(widths):
        side = config.input_size >> i
        in_ch = 3 if i == 0 else widths[i - 1]
        if branch == "cnc":
            costs.append(conv_cost(in_ch, out_ch, 3, side, side, bias=False))
        elif branch == "dsc":
            costs.append(dsc_cost(in_ch, out_ch, side, side))
        else:
            costs.append(conv_cost(mfe_input_channels(config, i), out_ch, 3, side, side))
        costs.append(bn_cost(out_ch))
    return _total(costs)


def _total(costs: list[LayerCost]) -> LayerCost:
    return LayerCost(sum(c.params for c in costs), sum(c.flops for c in costs))


def count_params_and_flops(config: HybridModelConfig) -> ModelCost:
    """
    Exact analytic cost of a configuration.

    Returns:
        ModelCost with totals, a per-component breakdown, the conv-layer
        census and the reference values for the matching
        ablation row (None for toggle combinations not in the study)
    """
    breakdown: dict[str, LayerCost] = {}
    conv_layers = 0
    if config.use_attention:
        breakdown["attention"], conv_layers = _attention_costs(config)
    for branch in config.enabled_branches:
        breakdown[branch] = _branch_costs(config, branch)
        conv_layers += NUM_BLOCKS

    in_f = config.concat_channels
    head = []
    for out_f in HEAD_WIDTHS:
        head.append(dense_cost(in_f, out_f))
        in_f = out_f
    breakdown["head"] = _total(head)

    total = _total(list(breakdown.values()))
    row = reference_row(config)
    return ModelCost(
        param_count=total.params,
        flop_count=total.flops,
        conv_layers=conv_layers,
        breakdown={k: {"params": v.params, "flops": v.flops} for k, v in breakdown.items()},
        reference_params_millions=row.params_millions if row else None,
        reference_flops_giga=row.flops_giga if row else None,
    )


def cost_table(config: HybridModelConfig) -> list[dict]:
    """Our totals next to the reference ones for every ablation row at the config's widths."""
    rows = []
    for row in ABLATION_ROWS:
        cost = count_params_and_flops(row.apply(config))
        rows.append({
            "row": row.label,
            "params": cost.param_count,
            "params_millions": round(cost.param_count / 1e6, 3),
            "reference_params_millions": row.params_millions,
            "flops": cost.flop_count,
            "flops_giga": round(cost.flop_count / 1e9, 3),
            "reference_flops_giga": row.flops_giga,
            "conv_layers": cost.conv_layers,
        })
    return rows
