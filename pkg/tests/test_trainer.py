"""Tests del bucle de entrenamiento SGD, evaluación y rejilla de ablación."""

import numpy as np
import pytest

from hybridcnn.core.errors import NonFiniteError, NonFiniteLossError, ShapeError
from hybridcnn.core.tensor import Tensor
from hybridcnn.models.hybrid import HybridModelConfig
from hybridcnn.models.training import TrainConfig
from hybridcnn.network import ABLATION_ROWS, HybridCNN
from hybridcnn.services.ablation import run_ablation
from hybridcnn.services.evaluator import evaluate
from hybridcnn.services.trainer import best_checkpoint_path, sgd_step, train

from tests.conftest import color_dataset


def test_sgd_step_arithmetic(float64):
    """p = 1, g = 2, lr = 0.001 -> 0.998; g = 0 deja p igual."""
    params = {"p": Tensor([1.0], requires_grad=True)}
    assert sgd_step(params, {"p": np.array([2.0])}, 0.001)["p"].item() == pytest.approx(0.998, abs=1e-15)
    assert sgd_step(params, {"p": np.array([0.0])}, 0.001)["p"].item() == 1.0
    assert params["p"].item() == 1.0


def test_sgd_on_quadratic_bowl(float64):
    """f(p) = p^2, 1000 pasos desde 1: |p| < 0.2."""
    params = {"p": Tensor([1.0], requires_grad=True)}
    for _ in range(1000):
        params = sgd_step(params, {"p": 2.0 * params["p"].data}, 0.001)
    assert abs(params["p"].item()) < 0.2
    assert params["p"].item() == pytest.approx(0.998 ** 1000, rel=1e-9)


def test_sgd_step_rejects_missing_or_misshapen_gradient():
    params = {"p": Tensor([1.0, 2.0], requires_grad=True)}
    with pytest.raises(ShapeError):
        sgd_step(params, {}, 0.1)
    with pytest.raises(ShapeError):
        sgd_step(params, {"p": np.zeros(3)}, 0.1)


def _cfg(**overrides) -> TrainConfig:
    base = {"epochs": 2, "batch_size": 8, "learning_rate": 0.01, "seed": 0, "validation_fraction": 0.0}
    return TrainConfig(**{**base, **overrides})


def test_zero_learning_rate_keeps_parameters_bit_identical(tiny_config, toy_dataset):
    """lr = 0: los parámetros no cambian."""
    model = HybridCNN(tiny_config)
    before = {k: v.numpy() for k, v in model.parameters().items()}
    train(model, toy_dataset, _cfg(learning_rate=0.0, epochs=1))
    for name, value in model.parameters().items():
        np.testing.assert_array_equal(value.data, before[name])


def test_same_seed_gives_identical_curves(tiny_config, toy_dataset):
    """Misma semilla, mismas curvas y mismos pesos."""
    a = train(HybridCNN(tiny_config), toy_dataset, _cfg())
    b = train(HybridCNN(tiny_config), toy_dataset, _cfg())
    assert [r.loss for r in a.curves] == [r.loss for r in b.curves]
    for name, value in a.model.parameters().items():
        np.testing.assert_array_equal(value.data, b.model.parameters()[name].data)


def test_loss_decreases_on_separable_data(tiny_config, toy_dataset):
    """Pérdida media de la época 10 menor que la de la época 1 en al menos 4 de 5 semillas."""
    decreased = 0
    for seed in range(5):
        model = HybridCNN(tiny_config.model_copy(update={"seed": seed}))
        result = train(model, toy_dataset, _cfg(epochs=10, learning_rate=0.05, seed=seed))
        assert len(result.curves) == 10
        decreased += result.curves[9].loss < result.curves[0].loss
    assert decreased >= 4


def test_validation_curves_and_checkpoints(tmp_path, tiny_config, toy_dataset):
    """Con validación: columnas val_*, checkpoint final y el mejor."""
    path = tmp_path / "model.ckpt"
    result = train(
        HybridCNN(tiny_config), toy_dataset,
        _cfg(validation_fraction=0.25, checkpoint_path=str(path)),
    )
    assert all(r.val_acc is not None and r.val_loss is not None for r in result.curves)
    assert result.checkpoint == path and path.is_file()
    assert result.best_checkpoint == best_checkpoint_path(path)
    assert best_checkpoint_path(path).name == "model.best.ckpt"
    assert 1 <= result.best_epoch <= 2


def test_non_finite_loss_aborts_with_batch_sources(monkeypatch, tiny_config, toy_dataset):
    """Un NaN durante el paso aborta con las fuentes del lote."""
    model = HybridCNN(tiny_config)

    def broken_forward(x, mode="eval"):
        raise NonFiniteError("conv2d", "forced")

    monkeypatch.setattr(model, "forward", broken_forward)
    with pytest.raises(NonFiniteLossError) as excinfo:
        train(model, toy_dataset, _cfg(epochs=1))
    assert excinfo.value.epoch == 1 and excinfo.value.batch_index == 0
    assert len(excinfo.value.sources) == 8
    assert excinfo.value.exit_code == 2


def test_evaluate_reports_cost_and_source(tiny_config, toy_dataset):
    report = evaluate(HybridCNN(tiny_config), toy_dataset)
    assert report.n_samples == len(toy_dataset)
    assert report.param_count == HybridCNN(tiny_config).param_count()
    assert report.data_source == "mem"
    assert np.array(report.confusion).sum() == len(toy_dataset)


def test_ablation_grid_labels_every_row(tiny_config, toy_dataset):
    """Dos filas de la ablación: un informe etiquetado por fila."""
    reports = run_ablation(toy_dataset, toy_dataset, _cfg(epochs=1), tiny_config, rows=ABLATION_ROWS[:2])
    assert [r.label for r in reports] == [ABLATION_ROWS[0].label, ABLATION_ROWS[1].label]
    assert reports[0].param_count > reports[1].param_count
    assert all(len(r.curves) == 1 for r in reports)


@pytest.mark.slow
def test_toy_overfit_reaches_full_train_accuracy():
    """Modelo completo (anchos [8,16,32,32], entrada 64) memoriza 32 imágenes para >= 4 de 5 semillas."""
    dataset = color_dataset(per_class=16, size=64)
    successes = 0
    for seed in range(5):
        config = HybridModelConfig(input_size=64, channel_widths=[8, 16, 32, 32], seed=seed)
        result = train(
            HybridCNN(config), dataset,
            TrainConfig(epochs=200, learning_rate=0.001, batch_size=16, seed=seed, validation_fraction=0.0),
        )
        successes += max(r.acc for r in result.curves) == 1.0
    assert successes >= 4
