"""Architecture configuration and cost models."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Branch = Literal["cnc", "dsc", "mfe"]
BRANCHES: tuple[Branch, ...] = ("cnc", "dsc", "mfe")
HEAD_WIDTHS = [1024, 512, 128, 2]


class HybridModelConfig(BaseModel):
    """Full description of a hybrid CNN: widths, input size, ablation toggles."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "input_size": 224,
                "channel_widths": [32, 64, 128, 128],
                "use_attention": True,
                "use_cnc_branch": True,
                "use_dsc_branch": True,
                "use_mfe_branch": True,
                "seed": 42,
            }
        }
    )

    input_size: int = Field(
        224,
        description="Square input side in pixels; must allow four 2x2 pools (multiple of 16)",
    )
    channel_widths: list[int] = Field(
        default_factory=lambda: [32, 64, 128, 128],
        description="Output channels of the four conv blocks, shared by all branches",
    )
    cnc_widths: Optional[list[int]] = Field(None, description="Per-branch override for FN-1 (CNC)")
    dsc_widths: Optional[list[int]] = Field(None, description="Per-branch override for FN-2 (DSC)")
    mfe_widths: Optional[list[int]] = Field(None, description="Per-branch override for the MFE network")

    use_attention: bool = Field(True, description="Residual attention pre-processing layer")
    use_cnc_branch: bool = Field(True, description="FN-1: cosine-normalized conv blocks")
    use_dsc_branch: bool = Field(True, description="FN-2: depthwise-separable conv blocks")
    use_mfe_branch: bool = Field(True, description="Meta-feature extraction network over SFMs")

    fc_widths: list[int] = Field(
        default_factory=lambda: list(HEAD_WIDTHS),
        description="Classification head widths (fixed)",
    )
    attention_width: int = Field(16, gt=0, description="Internal width of the attention module")
    attention_residual_blocks: int = Field(2, ge=1, description="Residual blocks in the trunk branch")
    seed: int = Field(42, ge=0, description="Initialization seed")

    @field_validator("input_size")
    @classmethod
    def _check_input_size(cls, value: int) -> int:
        if value <= 0 or value % 16:
            raise ValueError(f"input_size must be a positive multiple of 16, got {value}")
        return value

    @field_validator("channel_widths", "cnc_widths", "dsc_widths", "mfe_widths")
    @classmethod
    def _check_widths(cls, value: Optional[list[int]]) -> Optional[list[int]]:
        if value is None:
            return value
        if len(value) != 4 or any(w <= 0 for w in value):
            raise ValueError(f"branch widths must be four positive integers, got {value}")
        return value

    @field_validator("fc_widths")
    @classmethod
    def _check_head(cls, value: list[int]) -> list[int]:
        if value != HEAD_WIDTHS:
            raise ValueError(f"fc_widths is fixed to {HEAD_WIDTHS}, got {value}")
        return value

    @model_validator(mode="after")
    def _check_branches(self) -> "HybridModelConfig":
        if not self.enabled_branches:
            raise ValueError("at least one of the CNC, DSC and MFE branches must be enabled")
        return self

    @property
    def enabled_branches(self) -> list[Branch]:
        flags = {"cnc": self.use_cnc_branch, "dsc": self.use_dsc_branch, "mfe": self.use_mfe_branch}
        return [b for b in BRANCHES if flags[b]]

    def widths(self, branch: Branch) -> list[int]:
        override = {"cnc": self.cnc_widths, "dsc": self.dsc_widths, "mfe": self.mfe_widths}[branch]
        return list(override or self.channel_widths)

    @property
    def concat_channels(self) -> int:
        return sum(self.widths(b)[-1] for b in self.enabled_branches)

    @property
    def toggles(self) -> tuple[bool, bool, bool, bool]:
        """(attention, dsc, mfe, cnc), the column order of the ablation table."""
        return (self.use_attention, self.use_dsc_branch, self.use_mfe_branch, self.use_cnc_branch)


class ModelCost(BaseModel):
    """Analytic parameter and FLOP totals for a configuration."""

    param_count: int = Field(..., description="Trainable scalars")
    flop_count: int = Field(..., description="2 x multiply-accumulates of conv and dense layers")
    conv_layers: int = Field(..., description="Conv layer census (a DSC layer counts once)")
    breakdown: dict[str, dict[str, int]] = Field(
        default_factory=dict,
        description="Per component: {'params': ..., 'flops': ...}",
    )
    reference_params_millions: Optional[float] = Field(None, description="Reference value, if any")
    reference_flops_giga: Optional[float] = Field(None, description="Reference value, if any")
