"""Statistical feature maps and the MFE block input."""

from dataclasses import dataclass

from hybridcnn.core.errors import ShapeError
from hybridcnn.core.tensor import Tensor, concat, reduce


@dataclass(frozen=True)
class StatFeatureMaps:
    """Per-pixel maximum and population variance across a block's k feature maps."""

    max_map: Tensor
    var_map: Tensor

    @property
    def spatial(self) -> tuple[int, int]:
        return self.max_map.shape[2], self.max_map.shape[3]


def compute_sfm(feature_maps: Tensor) -> StatFeatureMaps:
    """
    Collapse `[N, k, h, w]` feature maps into two `[N, 1, h, w]` maps.

    The max map routes its gradient to the arg-max channel (first on ties);
    the variance map divides by k.

    Raises:
        ShapeError: If the input is not NCHW or k == 0
    """
    if feature_maps.ndim != 4:
        raise ShapeError(f"compute_sfm expects [N, k, h, w], got {feature_maps.shape}")
    if feature_maps.shape[1] == 0:
        raise ShapeError("compute_sfm needs at least one feature map (k == 0)")
    return StatFeatureMaps(
        max_map=reduce("max", feature_maps, axis=1, keepdims=True),
        var_map=reduce("var", feature_maps, axis=1, keepdims=True),
    )


def mfe_block_input(
    sfm_fn1: StatFeatureMaps | None,
    sfm_fn2: StatFeatureMaps | None,
    sfm_mfe_prev: StatFeatureMaps,
) -> Tensor:
    """
    Stack SFMs into the input of the next MFE block.

    Channel order is fixed: [FN1.max, FN1.var, FN2.max, FN2.var, MFE.max,
    MFE.var]. A disabled feeder network (None) contributes no channels.

    Raises:
        ShapeError: If the SFM pairs disagree on spatial size
    """
    pairs = [s for s in (sfm_fn1, sfm_fn2, sfm_mfe_prev) if s is not None]
    reference = sfm_mfe_prev.max_map.shape
    for sfm in pairs:
        if sfm.max_map.shape != reference or sfm.var_map.shape != reference:
            raise ShapeError(
                f"SFM spatial mismatch: {sfm.max_map.shape} vs {reference}"
            )
    channels = [m for s in pairs for m in (s.max_map, s.var_map)]
    return concat(channels, axis=1)
