"""Tests de la línea de comandos: resolución de opciones, códigos de salida y artefactos."""

import json
import logging
from unittest.mock import MagicMock

import pytest

from hybridcnn import main as main_module
from hybridcnn.cli.parser import parse_invocation
from hybridcnn.core.errors import ConfigError, GradcheckFailure, NonFiniteLossError, UsageError
from hybridcnn.main import configure_logging, run
from hybridcnn.services.pipeline_service import PipelineService, run_sidecar_path


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(main_module, "configure_logging", lambda *args, **kwargs: None)


@pytest.fixture
def service():
    return MagicMock(spec=PipelineService)


# ==================== OPTION RESOLUTION ====================

def test_defaults_config_file_then_flags(tmp_path):
    """Precedencia: valores por defecto < --config < flags."""
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"epochs": 5, "lr": 0.01, "data-dir": "from_config", "out": "m.ckpt"}))
    inv = parse_invocation(["train", "--config", str(config), "--epochs", "7", "--no-mfe"])
    assert inv.options["epochs"] == 7
    assert inv.options["lr"] == 0.01
    assert inv.options["data_dir"] == "from_config"
    assert inv.options["batch"] == 16
    assert inv.options["no_mfe"] is True and inv.options["no_cnc"] is False
    assert inv.flags == {"epochs", "no_mfe"}
    assert inv.describe().startswith("command=train seed=42 config=")


def test_widths_flag_is_parsed():
    inv = parse_invocation(["count", "--widths", "8,16,32,32", "--input-size", "64"])
    assert inv.options["widths"] == [8, 16, 32, 32]
    assert inv.options["input_size"] == 64


def test_unknown_config_key(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"epochz": 5}))
    with pytest.raises(ConfigError):
        parse_invocation(["train", "--config", str(config), "--data-dir", "d", "--out", "o"])


def test_missing_required_option():
    with pytest.raises(UsageError):
        parse_invocation(["eval", "--model", "m.ckpt"])


# ==================== EXIT CODES ====================

def test_unknown_flag_exits_1(capsys, service):
    assert run(["count", "--bogus"], service) == 1
    assert capsys.readouterr().err.startswith("error kind=usage")


def test_help_exits_0(capsys):
    assert run(["--help"]) == 0


def test_missing_model_file_exits_1(tmp_path, capsys):
    """Un checkpoint inexistente es un error de ruta (código 1)."""
    code = run([
        "eval", "--model", str(tmp_path / "none.ckpt"),
        "--data-dir", str(tmp_path), "--report", str(tmp_path / "r.json"),
    ], PipelineService())
    captured = capsys.readouterr()
    assert code == 1
    assert "error kind=bad_path" in captured.err
    assert captured.out.startswith("resolved command=eval")


def test_gradcheck_failure_exits_3(capsys, service):
    service.gradcheck.side_effect = GradcheckFailure("1 of 17 checks failed")
    assert run(["gradcheck", "--scope", "op"], service) == 3
    assert "error kind=gradcheck message=1 of 17 checks failed" in capsys.readouterr().err


def test_nan_abort_exits_2(tmp_path, capsys, service):
    service.train.side_effect = NonFiniteLossError(3, 1, ["normal/a.png", "abnormal/b.png"])
    code = run(["train", "--data-dir", str(tmp_path), "--out", str(tmp_path / "m.ckpt")], service)
    err = capsys.readouterr().err
    assert code == 2
    assert "error kind=nan_abort" in err and "normal/a.png" in err


def test_unexpected_exception_is_internal(capsys, service):
    service.count.side_effect = RuntimeError("boom")
    assert run(["count"], service) == 2
    assert "error kind=internal message=boom" in capsys.readouterr().err


def test_invalid_model_option_is_a_config_error(capsys, service):
    """Un tamaño de entrada no múltiplo de 16 se rechaza antes de llamar al servicio."""
    assert run(["count", "--input-size", "30"], service) == 1
    assert "error kind=bad_config" in capsys.readouterr().err
    service.count.assert_not_called()


# ==================== ARTIFACTS ====================

def test_count_prints_table_and_writes_sidecar(tmp_path, capsys):
    out = tmp_path / "cost.json"
    assert run(["count", "--input-size", "32", "--widths", "4,4,4,4", "--out", str(out)], PipelineService()) == 0
    table = json.loads(out.read_text())
    assert len(table["rows"]) == 8
    sidecar = json.loads(run_sidecar_path(out).read_text())
    assert sidecar["command"] == "count"
    assert sidecar["config"]["options"]["widths"] == [4, 4, 4, 4]
    assert "tool_version" in sidecar
    assert "conv_layers=" in capsys.readouterr().out


def test_log_file_receives_records(tmp_path):
    log_file = tmp_path / "run.log"
    root = logging.getLogger()
    saved_handlers, saved_level = root.handlers[:], root.level
    try:
        configure_logging("INFO", str(log_file))
        logging.getLogger("hybridcnn.test").info("hola")
        for handler in root.handlers:
            handler.flush()
        assert "hola" in log_file.read_text(encoding="utf-8")
    finally:
        for handler in root.handlers:
            handler.close()
        root.handlers = saved_handlers
        root.setLevel(saved_level)
