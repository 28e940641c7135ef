"""Tests del motor de tensores y la cinta de autodiferenciación."""

import numpy as np
import pytest

from hybridcnn.core.config import settings
from hybridcnn.core.errors import NonFiniteError, ShapeError, TapeError, TensorDivisionError
from hybridcnn.core.tensor import Tape, Tensor, backward, concat, matmul, no_record, reduce, use_dtype
from hybridcnn.services.gradcheck import check_function


def test_add_and_identity_multiplication():
    """Aritmética elemental básica."""
    np.testing.assert_array_equal((Tensor([1, 2]) + Tensor([3, 4])).data, [4, 6])
    x = Tensor(np.random.default_rng(0).normal(size=(3, 3)))
    assert np.array_equal((x * 1.0).data, x.data)


def test_tensor_data_is_read_only():
    """Los tensores son inmutables."""
    x = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        x.data[0] = 5.0


def test_division_by_zero_strict_and_lenient(monkeypatch):
    """División por cero: error en modo estricto, NonFinite en modo permisivo."""
    with pytest.raises(TensorDivisionError):
        Tensor([1.0]) / Tensor([0.0])
    monkeypatch.setattr(settings, "STRICT_MODE", False)
    with pytest.raises(NonFiniteError):
        Tensor([1.0]) / Tensor([0.0])


def test_broadcast_rejected_when_it_would_grow_left_operand():
    """Solo se permite broadcasting hacia la forma del primer operando."""
    with pytest.raises(ShapeError):
        Tensor(np.ones(3)) + Tensor(np.ones((2, 3)))
    out = Tensor(np.ones((2, 3))) + Tensor(np.ones(3))
    assert out.shape == (2, 3)


def test_matmul_examples():
    """Identidad y producto a mano."""
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(matmul(Tensor(np.eye(2)), a).data, a.data)
    np.testing.assert_array_equal(matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]])).data, [[11.0]])
    with pytest.raises(ShapeError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_reduce_max_and_variance_by_hand():
    """max{0,2} = 2 y var{0,2} = 1 (varianza poblacional)."""
    x = Tensor([0.0, 2.0])
    assert reduce("max", x).item() == 2.0
    assert reduce("var", x).item() == 1.0
    same = Tensor(np.tile(np.arange(6.0).reshape(1, 1, 2, 3), (1, 4, 1, 1)))
    np.testing.assert_array_equal(reduce("var", same, axis=1).data, np.zeros((1, 2, 3)))


def test_reduce_rejects_bad_axis():
    """Eje fuera de rango o repetido."""
    with pytest.raises(ShapeError):
        reduce("sum", Tensor(np.ones((2, 2))), axis=5)
    with pytest.raises(ShapeError):
        reduce("sum", Tensor(np.ones((2, 2))), axis=(0, 0))


def test_sum_backward_is_all_ones():
    """d sum(x) / dx = 1."""
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    with Tape() as tape:
        loss = x.sum()
    np.testing.assert_array_equal(backward(tape, loss)[x], np.ones((2, 3)))


def test_bilinear_and_accumulation_gradients():
    """d sum(w*x)/dw = x; dos caminos a un mismo nodo se suman."""
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    w = Tensor([0.5, 0.5, 0.5], requires_grad=True)
    with Tape() as tape:
        loss = (w * x).sum()
    np.testing.assert_array_equal(backward(tape, loss)[w], x.data)

    with Tape() as tape:
        loss = (x + x).sum()
    np.testing.assert_array_equal(backward(tape, loss)[x], [2.0, 2.0, 2.0])


def test_exp_gradient_at_zero(float64):
    """Gradiente de exp en 0 contra diferencias finitas."""
    x = Tensor([0.0], requires_grad=True)
    with Tape() as tape:
        loss = x.exp().sum()
    assert abs(backward(tape, loss)[x][0] - 1.0) < 1e-6
    numeric = (np.exp(1e-5) - np.exp(-1e-5)) / 2e-5
    assert abs(numeric - 1.0) < 1e-6


def test_matmul_gradient_matches_finite_differences():
    """4x5 · 5x3 aleatorio en f64."""
    rng = np.random.default_rng(3)
    entry = check_function(
        "matmul", lambda t: matmul(t["a"], t["b"]),
        {"a": rng.normal(size=(4, 5)), "b": rng.normal(size=(5, 3))},
    )
    assert entry.passed, entry.max_rel_error


def test_backward_requires_scalar_loss_on_same_tape():
    """Errores de la cinta: pérdida no escalar o de otra cinta."""
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = x * 2.0
    with pytest.raises(TapeError):
        backward(tape, y)
    with Tape() as other:
        loss = (x * 3.0).sum()
    with pytest.raises(TapeError):
        backward(tape, loss)
    assert len(backward(other, loss)) > 0


def test_no_record_skips_the_tape():
    """Dentro de no_record no se graba nada."""
    x = Tensor([1.0], requires_grad=True)
    with Tape() as tape:
        with no_record():
            _ = x * 2.0
        assert len(tape) == 0


def test_nan_is_rejected_at_creation_site():
    """Un NaN en el resultado levanta NonFiniteError con el nombre de la operación."""
    with pytest.raises(NonFiniteError, match="ln"):
        Tensor([-1.0]).log()


def test_concat_splits_gradient_back():
    """concat reparte el gradiente entre sus entradas."""
    a = Tensor(np.ones((1, 2, 2, 2)), requires_grad=True)
    b = Tensor(np.ones((1, 3, 2, 2)), requires_grad=True)
    with Tape() as tape:
        loss = (concat([a, b], axis=1) * 2.0).sum()
    grads = backward(tape, loss)
    assert grads[a].shape == a.shape and grads[b].shape == b.shape
    np.testing.assert_array_equal(grads[b], np.full(b.shape, 2.0))


def test_use_dtype_switches_precision():
    """use_dtype cambia el dtype por defecto temporalmente."""
    with use_dtype("float64"):
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.dtype(settings.DTYPE)
