"""Hybrid network assembly: attention, SFM fusion, branches, head, accounting."""

from hybridcnn.network.accounting import (
    ABLATION_ROWS,
    AblationRow,
    conv_cost,
    cost_table,
    count_params_and_flops,
    dsc_cost,
)
from hybridcnn.network.attention import AttentionParams, attention_branches, attention_forward, init_attention
from hybridcnn.network.hybrid import ForwardTaps, HybridCNN, hybrid_forward, init_layers, predict_proba
from hybridcnn.network.sfm import StatFeatureMaps, compute_sfm, mfe_block_input

__all__ = [
    # Attention
    "AttentionParams",
    "attention_branches",
    "attention_forward",
    "init_attention",
    # SFM
    "StatFeatureMaps",
    "compute_sfm",
    "mfe_block_input",
    # Model
    "HybridCNN",
    "ForwardTaps",
    "hybrid_forward",
    "init_layers",
    "predict_proba",
    # Accounting
    "ABLATION_ROWS",
    "AblationRow",
    "conv_cost",
    "dsc_cost",
    "count_params_and_flops",
    "cost_table",
]
