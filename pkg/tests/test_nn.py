"""Tests de los operadores neuronales: convoluciones, BN, activaciones y pérdida."""

import numpy as np
import pytest

from hybridcnn.core.errors import LabelError, ShapeError
from hybridcnn.core.tensor import Tape, Tensor, backward
from hybridcnn.nn import (
    BatchNormParams,
    ConvParams,
    DscParams,
    batch_norm,
    conv2d,
    cosine_norm_conv,
    depthwise_separable_conv,
    global_avg_pool,
    maxpool2x2,
    relu,
    softmax,
    softmax_cross_entropy,
)


def naive_conv(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Convolución de referencia con bucles (padding same, stride 1)."""
    n, c, h, wd = x.shape
    o, _, k, _ = w.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.zeros((n, o, h, wd))
    for i in range(n):
        for j in range(o):
            for r in range(h):
                for s in range(wd):
                    out[i, j, r, s] = (xp[i, :, r:r + k, s:s + k] * w[j]).sum() + b[j]
    return out


def bn_params(channels: int, gamma: float = 1.0, beta: float = 0.0) -> BatchNormParams:
    return BatchNormParams(
        gamma=Tensor(np.full(channels, gamma)),
        beta=Tensor(np.full(channels, beta)),
        running_mean=Tensor(np.zeros(channels)),
        running_var=Tensor(np.ones(channels)),
    )


# ==================== CONV2D ====================

def test_conv2d_all_ones_center_and_corner():
    """Entrada y kernel de unos: centro 9, esquinas 4."""
    out = conv2d(Tensor(np.ones((1, 1, 3, 3))), ConvParams(Tensor(np.ones((1, 1, 3, 3))), Tensor([0.0])))
    assert out.data[0, 0, 1, 1] == 9.0
    assert out.data[0, 0, 0, 0] == 4.0 and out.data[0, 0, 2, 2] == 4.0


def test_conv2d_delta_kernel_is_identity(float64):
    """Kernel delta devuelve la entrada."""
    x = np.random.default_rng(0).normal(size=(2, 1, 5, 5))
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1.0
    np.testing.assert_array_equal(conv2d(Tensor(x), ConvParams(Tensor(w))).data, x)


def test_conv2d_matches_naive_loops(float64):
    """Comparación contra la referencia con bucles."""
    rng = np.random.default_rng(1)
    x, w, b = rng.normal(size=(1, 2, 5, 5)), rng.normal(size=(3, 2, 3, 3)), rng.normal(size=3)
    out = conv2d(Tensor(x), ConvParams(Tensor(w), Tensor(b))).data
    np.testing.assert_allclose(out, naive_conv(x, w, b), rtol=1e-12, atol=1e-12)


def test_conv2d_channel_mismatch():
    """Canales de entrada distintos a los del filtro."""
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.ones((1, 2, 4, 4))), ConvParams(Tensor(np.ones((1, 3, 3, 3)))))


# ==================== COSINE-NORMALIZED CONV ====================

def _single_patch_input(patch: np.ndarray) -> Tensor:
    """Entrada 1x1 espacial: el patch efectivo es el centro del kernel."""
    return Tensor(patch.reshape(1, -1, 1, 1))


def _center_filter(vector: np.ndarray) -> np.ndarray:
    w = np.zeros((1, vector.size, 3, 3))
    w[0, :, 1, 1] = vector
    return w


def test_cnc_parallel_antiparallel_orthogonal(float64):
    """Coseno 1, -1 y 0."""
    x_hat = np.array([1.0, 1.0, 0.0])
    cases = [(2.5 * x_hat, 1.0), (-x_hat, -1.0), (np.array([1.0, -1.0, 0.0]), 0.0)]
    for w, expected in cases:
        out = cosine_norm_conv(_single_patch_input(x_hat), ConvParams(Tensor(_center_filter(w))))
        assert out.data[0, 0, 0, 0] == pytest.approx(expected, abs=1e-12)


def test_cnc_zero_patch_gives_zero():
    """Norma nula: el denominador se acota y la salida es 0."""
    out = cosine_norm_conv(Tensor(np.zeros((1, 2, 4, 4))), ConvParams(Tensor(np.ones((3, 2, 3, 3)))))
    np.testing.assert_array_equal(out.data, 0.0)


def _input_gradient(op, x: np.ndarray, w: np.ndarray, projection: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x_t, w_t = Tensor(x, requires_grad=True), Tensor(w, requires_grad=True)
    with Tape() as tape:
        objective = (op(x_t, ConvParams(w_t)) * Tensor(projection)).sum()
    grads = backward(tape, objective)
    return grads[x_t], grads[w_t]


def test_cnc_gradient_on_black_region_is_finite(float64):
    """Parches nulos (bordes negros): el gradiente es el de la conv estándar dividido por 1e-8."""
    rng = np.random.default_rng(5)
    w = rng.normal(size=(3, 2, 3, 3))
    projection = rng.normal(size=(1, 3, 6, 6))
    d_x, d_w = _input_gradient(cosine_norm_conv, np.zeros((1, 2, 6, 6)), w, projection)
    d_x_std, _ = _input_gradient(conv2d, np.zeros((1, 2, 6, 6)), w, projection)
    assert np.all(np.isfinite(d_x))
    np.testing.assert_allclose(d_x, d_x_std / 1e-8, rtol=1e-10, atol=1e-6)
    np.testing.assert_array_equal(d_w, 0.0)


def test_cnc_is_bounded_and_scale_invariant(float64):
    """1000 sorteos: salida en [-1, 1] e invariante al escalar la entrada."""
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.normal(size=(1, 2, 3, 3)) * rng.uniform(0.01, 100.0)
        w = rng.normal(size=(2, 2, 3, 3))
        params = ConvParams(Tensor(w))
        base = cosine_norm_conv(Tensor(x), params).data
        assert np.all(np.abs(base) <= 1.0 + 1e-6)
        for c in (0.1, 10.0):
            np.testing.assert_allclose(cosine_norm_conv(Tensor(c * x), params).data, base, atol=1e-6)


def test_cnc_rejects_bias():
    """La convolución normalizada no lleva sesgo."""
    with pytest.raises(ShapeError):
        cosine_norm_conv(Tensor(np.ones((1, 1, 4, 4))), ConvParams(Tensor(np.ones((1, 1, 3, 3))), Tensor([0.0])))


# ==================== DSC ====================

def test_dsc_with_delta_depthwise_equals_pointwise(float64):
    """Depthwise delta reduce la DSC a una convolución 1x1."""
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 3, 4, 4))
    dw = np.zeros((3, 1, 3, 3))
    dw[:, 0, 1, 1] = 1.0
    pw, b = rng.normal(size=(5, 3, 1, 1)), rng.normal(size=5)
    out = depthwise_separable_conv(Tensor(x), DscParams(Tensor(dw), Tensor(pw), Tensor(b))).data
    expected = conv2d(Tensor(x), ConvParams(Tensor(pw), Tensor(b))).data
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


def test_dsc_zero_pointwise_gives_bias():
    """Pointwise nulo: la salida es el sesgo."""
    x = Tensor(np.random.default_rng(3).normal(size=(1, 2, 4, 4)))
    p = DscParams(Tensor(np.ones((2, 1, 3, 3))), Tensor(np.zeros((3, 2, 1, 1))), Tensor([1.0, 2.0, 3.0]))
    out = depthwise_separable_conv(x, p).data
    for j, value in enumerate((1.0, 2.0, 3.0)):
        np.testing.assert_array_equal(out[0, j], value)


def test_dsc_matches_per_channel_composition(float64):
    """Cada canal con conv2d propio y luego 1x1: mismo resultado."""
    rng = np.random.default_rng(4)
    x = rng.normal(size=(1, 3, 5, 5))
    dw, pw, b = rng.normal(size=(3, 1, 3, 3)), rng.normal(size=(2, 3, 1, 1)), rng.normal(size=2)
    stage = np.concatenate([
        conv2d(Tensor(x[:, c:c + 1]), ConvParams(Tensor(dw[c:c + 1]))).data for c in range(3)
    ], axis=1)
    expected = conv2d(Tensor(stage), ConvParams(Tensor(pw), Tensor(b))).data
    out = depthwise_separable_conv(Tensor(x), DscParams(Tensor(dw), Tensor(pw), Tensor(b))).data
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


# ==================== BATCH NORM ====================

def test_bn_constant_input_is_zero():
    """Entrada constante en modo train: todo ceros."""
    out = batch_norm(Tensor(np.full((2, 3, 4, 4), 7.0)), bn_params(3), "train")
    np.testing.assert_allclose(out.data, 0.0, atol=1e-6)


def test_bn_beta_shifts_channel_mean(float64):
    """Con beta = 5, la media por canal es 5."""
    x = np.random.default_rng(5).normal(size=(4, 2, 3, 3)) * 3.0 + 1.0
    out = batch_norm(Tensor(x), bn_params(2, beta=5.0), "train").data
    np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 5.0, atol=1e-5)


def test_bn_eval_with_identity_stats(float64):
    """Estadísticas (0, 1): salida gamma * x + beta (con epsilon)."""
    x = np.random.default_rng(6).normal(size=(2, 2, 3, 3))
    p = bn_params(2, gamma=2.0, beta=0.5)
    out = batch_norm(Tensor(x), p, "eval").data
    np.testing.assert_allclose(out, 2.0 * x / np.sqrt(1.0 + p.epsilon) + 0.5, rtol=1e-12)


def test_bn_train_updates_running_stats_eval_does_not(float64):
    """train reemplaza las estadísticas; eval no las toca."""
    x = np.random.default_rng(8).normal(size=(4, 2, 3, 3)) + 2.0
    p = bn_params(2)
    batch_norm(Tensor(x), p, "train")
    expected = 0.9 * 0.0 + 0.1 * x.mean(axis=(0, 2, 3))
    np.testing.assert_allclose(p.running_mean.data, expected, rtol=1e-12)
    before = p.running_mean.data.copy()
    batch_norm(Tensor(x), p, "eval")
    np.testing.assert_array_equal(p.running_mean.data, before)


# ==================== ACTIVATIONS / POOLS / LOSS ====================

def test_relu_maxpool_softmax_examples():
    """Ejemplos triviales de activaciones y pooling."""
    np.testing.assert_array_equal(relu(Tensor([-1.0, 2.0])).data, [0.0, 2.0])
    pooled = maxpool2x2(Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)))
    assert pooled.shape == (1, 1, 1, 1) and pooled.item() == 4.0
    np.testing.assert_allclose(softmax(Tensor([[0.0, 0.0]])).data, [[0.5, 0.5]])
    assert global_avg_pool(Tensor(np.ones((2, 3, 4, 4)))).shape == (2, 3)


def test_maxpool_rejects_odd_dims():
    with pytest.raises(ShapeError):
        maxpool2x2(Tensor(np.ones((1, 1, 3, 4))))


def test_cross_entropy_examples(float64):
    """ln 2 para predicción uniforme, ~0 para predicción segura y correcta."""
    loss = softmax_cross_entropy(Tensor([[0.0, 0.0]]), np.array([[1.0, 0.0]]))
    assert loss.item() == pytest.approx(np.log(2.0), abs=1e-9)
    confident = softmax_cross_entropy(Tensor([[100.0, -100.0]]), np.array([[1.0, 0.0]]))
    assert confident.item() < 1e-12


def test_cross_entropy_requires_one_hot():
    with pytest.raises(LabelError):
        softmax_cross_entropy(Tensor([[0.0, 0.0]]), np.array([[0.5, 0.5]]))
