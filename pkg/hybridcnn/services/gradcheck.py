"""Finite-difference verification of analytic gradients.

Every check runs in float64. The scalar objective is `sum(out * R)` for a
fixed random projection R (or the loss itself for the whole model);
numeric gradients use central differences with h = 1e-5. The error of a
group is the worst element:

    max |analytic - numeric| / (|analytic| + 1e-8)
"""

import logging
from collections.abc import Callable
from typing import Literal

import numpy as np

from hybridcnn.core.rng import Rng
from hybridcnn.core.tensor import Tape, Tensor, backward, no_record, use_dtype
from hybridcnn.models.hybrid import HybridModelConfig
from hybridcnn.models.report import GradcheckEntry, GradcheckReport
from hybridcnn.network.attention import attention_forward, init_attention
from hybridcnn.network.hybrid import HybridCNN
from hybridcnn.network.sfm import compute_sfm
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
    sigmoid,
    softmax,
    softmax_cross_entropy,
    upsample_nearest2x,
)

logger = logging.getLogger(__name__)

STEP = 1e-5
ERROR_FLOOR = 1e-8
OP_TOLERANCE = 1e-4
MODEL_TOLERANCE = 1e-3

OpFn = Callable[[dict[str, Tensor]], Tensor]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = ERROR_FLOOR) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / (np.abs(analytic) + floor)))


def _sample(size: int, limit: int | None, rng: Rng) -> np.ndarray:
    if limit is None or size <= limit:
        return np.arange(size)
    return np.sort(rng.choice(size, size=limit, replace=False))


def check_function(
    name: str,
    fn: OpFn,
    inputs: dict[str, np.ndarray],
    seed: int = 0,
    tolerance: float = OP_TOLERANCE,
    max_elements: int | None = None,
) -> GradcheckEntry:
    """
    Compare tape gradients of `fn` with central differences.

    Args:
        name: Label for the report
        fn: Maps named leaf tensors to an output tensor
        inputs: Leaf values (differentiated with respect to all of them)
        seed: Seed of the projection and of element sampling
        tolerance: Pass threshold on the error
        max_elements: Sample at most this many elements per input
    """
    rng = Rng(seed)
    with use_dtype("float64"):
        leaves = {k: Tensor(v, requires_grad=True, name=k) for k, v in inputs.items()}
        with Tape() as tape:
            out = fn(leaves)
            projection = Tensor(rng.normal(size=out.shape))
            objective = (out * projection).sum()
        grads = backward(tape, objective)
        proj = projection.data

        def _outputs(arrays: dict[str, np.ndarray]) -> np.ndarray:
            with no_record():
                return fn({k: Tensor(v) for k, v in arrays.items()}).data

        worst = 0.0
        base = {k: np.array(v, dtype=np.float64) for k, v in inputs.items()}
        for key, leaf in leaves.items():
            analytic = grads[leaf] if leaf in grads else np.zeros_like(leaf.data)
            picks = _sample(leaf.size, max_elements, rng)
            numeric = np.empty(picks.size)
            for j, flat in enumerate(picks):
                plus = {k: v.copy() for k, v in base.items()}
                minus = {k: v.copy() for k, v in base.items()}
                plus[key].reshape(-1)[flat] += STEP
                minus[key].reshape(-1)[flat] -= STEP
                # untouched outputs cancel exactly in the difference
                numeric[j] = float(((_outputs(plus) - _outputs(minus)) * proj).sum()) / (2 * STEP)
            worst = max(worst, relative_error(analytic.reshape(-1)[picks], numeric))
    return GradcheckEntry(name=name, max_rel_error=worst, tolerance=tolerance, passed=worst < tolerance)


# ==================== OPERATOR SUITE ====================

def _bn(t: dict[str, Tensor], rm: np.ndarray, rv: np.ndarray) -> BatchNormParams:
    return BatchNormParams(t["gamma"], t["beta"], Tensor(rm), Tensor(rv))


def _attention_case(rng: Rng) -> tuple[OpFn, dict[str, np.ndarray]]:
    params = init_attention(rng, width=4, residual_blocks=1)
    layers = params.named_layers()
    inputs = {"x": rng.uniform(size=(2, 3, 8, 8))}
    for layer_name, layer in layers.items():
        for attr in type(layer).TRAINABLE:
            tensor = getattr(layer, attr)
            if tensor is not None:
                inputs[f"{layer_name}.{attr}"] = tensor.numpy().astype(np.float64)

    def fn(t: dict[str, Tensor]) -> Tensor:
        for key, tensor in t.items():
            if key != "x":
                layer_name, _, attr = key.rpartition(".")
                setattr(layers[layer_name], attr, tensor)
        return attention_forward(t["x"], params, "train")

    return fn, inputs


def op_suite(seed: int = 0) -> list[tuple[str, OpFn, dict[str, np.ndarray]]]:
    """(name, function, inputs) for every differentiable operator."""
    rng = Rng(seed)
    n = rng.normal
    labels = np.eye(4)[[0, 3, 1]]
    rm, rv = n(size=3), rng.uniform(0.5, 2.0, size=3)
    cases: list[tuple[str, OpFn, dict[str, np.ndarray]]] = [
        ("conv2d", lambda t: conv2d(t["x"], ConvParams(t["w"], t["b"])),
         {"x": n(size=(2, 3, 6, 6)), "w": n(size=(4, 3, 3, 3)), "b": n(size=4)}),
        ("conv2d_1x1", lambda t: conv2d(t["x"], ConvParams(t["w"], t["b"])),
         {"x": n(size=(2, 3, 4, 4)), "w": n(size=(5, 3, 1, 1)), "b": n(size=5)}),
        ("cosine_norm_conv", lambda t: cosine_norm_conv(t["x"], ConvParams(t["w"])),
         {"x": n(size=(2, 3, 6, 6)), "w": n(size=(4, 3, 3, 3))}),
        ("depthwise_separable_conv",
         lambda t: depthwise_separable_conv(t["x"], DscParams(t["dw"], t["pw"], t["b"])),
         {"x": n(size=(2, 3, 6, 6)), "dw": n(size=(3, 1, 3, 3)), "pw": n(size=(4, 3, 1, 1)), "b": n(size=4)}),
        ("batch_norm_train", lambda t: batch_norm(t["x"], _bn(t, rm, rv), "train"),
         {"x": n(size=(4, 3, 4, 4)), "gamma": n(size=3), "beta": n(size=3)}),
        ("batch_norm_eval", lambda t: batch_norm(t["x"], _bn(t, rm, rv), "eval"),
         {"x": n(size=(4, 3, 4, 4)), "gamma": n(size=3), "beta": n(size=3)}),
        ("relu", lambda t: relu(t["x"]), {"x": n(size=(3, 7))}),
        ("sigmoid", lambda t: sigmoid(t["x"]), {"x": n(size=(3, 7)) * 3}),
        ("maxpool2x2", lambda t: maxpool2x2(t["x"]), {"x": n(size=(2, 3, 6, 6))}),
        ("upsample_nearest2x", lambda t: upsample_nearest2x(t["x"]), {"x": n(size=(2, 3, 3, 3))}),
        ("global_avg_pool", lambda t: global_avg_pool(t["x"]), {"x": n(size=(2, 3, 4, 4))}),
        ("dense", lambda t: dense(t["x"], DenseParams(t["w"], t["b"])),
         {"x": n(size=(3, 5)), "w": n(size=(5, 4)), "b": n(size=4)}),
        ("softmax", lambda t: softmax(t["x"]), {"x": n(size=(3, 4))}),
        ("softmax_cross_entropy", lambda t: softmax_cross_entropy(t["x"], labels), {"x": n(size=(3, 4))}),
        ("sfm_max", lambda t: compute_sfm(t["x"]).max_map, {"x": n(size=(2, 4, 5, 5))}),
        ("sfm_var", lambda t: compute_sfm(t["x"]).var_map, {"x": n(size=(2, 4, 5, 5))}),
    ]
    attention_fn, attention_inputs = _attention_case(rng)
    cases.append(("attention", attention_fn, attention_inputs))
    return cases


def gradcheck_ops(seed: int = 0, tolerance: float = OP_TOLERANCE) -> GradcheckReport:
    report = GradcheckReport(scope="op", seed=seed)
    for name, fn, inputs in op_suite(seed):
        entry = check_function(name, fn, inputs, seed=seed, tolerance=tolerance, max_elements=64)
        report.entries.append(entry)
        status = "✅" if entry.passed else "❌"
        logger.info(f"{status} gradcheck {name}: {entry.max_rel_error:.2e}")
    return report


# ==================== WHOLE MODEL ====================

def gradcheck_config(seed: int = 0) -> HybridModelConfig:
    """Small all-branch configuration used for the whole-model check."""
    return HybridModelConfig(input_size=16, channel_widths=[4, 4, 4, 4], attention_width=4, seed=seed)


def gradcheck_model(
    model: HybridCNN | None = None,
    seed: int = 0,
    tolerance: float = MODEL_TOLERANCE,
    samples_per_tensor: int = 4,
    batch: int = 2,
) -> GradcheckReport:
    """
    Check d(loss)/d(parameter) for every parameter tensor of a model.

    The model is copied to float64 and run in eval mode on random inputs
    with random one-hot labels; a few elements of each parameter tensor
    (and of the input) are perturbed. One report entry per tensor.
    """
    rng = Rng(seed)
    model = model if model is not None else HybridCNN(gradcheck_config(seed))
    size = model.config.input_size
    report = GradcheckReport(scope="model", seed=seed)

    with use_dtype("float64"):
        model64 = model.astype("float64")
        x_data = rng.uniform(size=(batch, 3, size, size))
        labels = np.eye(2)[rng.integers(0, 2, size=batch)]

        def loss_of(x: Tensor) -> Tensor:
            logits, _ = model64.forward(x, mode="eval")
            return softmax_cross_entropy(logits, labels)

        x = Tensor(x_data, requires_grad=True, name="input")
        params = model64.parameters()
        with Tape() as tape:
            loss = loss_of(x)
        gmap = backward(tape, loss)
        analytic = gmap.for_parameters(params)
        analytic["input"] = gmap[x] if x in gmap else np.zeros_like(x_data)

        def numeric_loss(inputs: np.ndarray) -> float:
            with no_record():
                return loss_of(Tensor(inputs)).item()

        groups = {**{k: p.data for k, p in params.items()}, "input": x_data}
        for name, value in groups.items():
            picks = _sample(value.size, samples_per_tensor, rng)
            numeric = np.empty(picks.size)
            for j, flat in enumerate(picks):
                estimates = []
                for sign in (1.0, -1.0):
                    shifted = value.copy()
                    shifted.reshape(-1)[flat] += sign * STEP
                    if name == "input":
                        estimates.append(numeric_loss(shifted))
                    else:
                        model64.load_state({name: Tensor(shifted)})
                        estimates.append(numeric_loss(x_data))
                        model64.load_state({name: Tensor(value)})
                numeric[j] = (estimates[0] - estimates[1]) / (2 * STEP)
            err = relative_error(analytic[name].reshape(-1)[picks], numeric)
            report.entries.append(GradcheckEntry(name=name, max_rel_error=err, tolerance=tolerance, passed=err < tolerance))

    worst = report.worst
    logger.info(f"{'✅' if report.passed else '❌'} model gradcheck: worst {worst.name} {worst.max_rel_error:.2e}")
    return report


def gradcheck(scope: Literal["op", "model"], seed: int = 0) -> GradcheckReport:
    """Run the operator suite or the whole-model check."""
    if scope == "op":
        return gradcheck_ops(seed)
    if scope == "model":
        return gradcheck_model(seed=seed)
    raise ValueError(f"Unknown gradcheck scope: {scope}")
