"""Argument parsing and option resolution.

Every option is resolved in three layers: built-in defaults, then the JSON
object passed with `--config`, then the flags given on the command line.
Flags are registered with `argparse.SUPPRESS` defaults so the namespace only
holds what the user actually typed.
"""

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from hybridcnn import __version__
from hybridcnn.core.config import settings
from hybridcnn.core.errors import BadPathError, ConfigError, UsageError

COMMANDS = ("train", "eval", "extract", "fit-ml", "gradcheck", "gradcam", "count", "manifest", "ablate")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting with 2."""

    def error(self, message: str):
        raise UsageError(message)


# ==================== DEFAULTS ====================

_MODEL = {
    "input_size": 224,
    "widths": None,
    "no_attention": False,
    "no_cnc": False,
    "no_dsc": False,
    "no_mfe": False,
}

_DATA = {
    "train_fraction": 0.8,
    "augment_target": None,
    "subsample_normal": None,
}

_TRAIN = {
    "data_dir": None,
    "out": None,
    "epochs": 100,
    "lr": 0.001,
    "batch": 16,
    "seed": settings.DEFAULT_SEED,
    "val_fraction": 0.1,
    **_MODEL,
    **_DATA,
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "train": dict(_TRAIN),
    "ablate": dict(_TRAIN),
    "eval": {"model": None, "data_dir": None, "report": None, "batch": 16},
    "extract": {"model": None, "data_dir": None, "out": None},
    "fit-ml": {
        "features": None,
        "algo": "rf",
        "folds": 1,
        "test_features": None,
        "out": None,
        "report": None,
        "seed": settings.DEFAULT_SEED,
        "n_estimators": 100,
        "n_neighbors": 5,
    },
    "gradcheck": {"scope": "op", "seed": 0, "report": None},
    "gradcam": {"model": None, "image": None, "out": None, "branch": "all", "target_class": None, "sfm_dir": None},
    "count": {**_MODEL, "out": None},
    "manifest": {"data_dir": None, "out": None, "seed": settings.DEFAULT_SEED, **_DATA, "input_size": 224},
}

REQUIRED: dict[str, tuple[str, ...]] = {
    "train": ("data_dir", "out"),
    "ablate": ("data_dir", "out"),
    "eval": ("model", "data_dir", "report"),
    "extract": ("model", "data_dir", "out"),
    "fit-ml": ("features",),
    "gradcheck": (),
    "gradcam": ("model", "image", "out"),
    "count": (),
    "manifest": ("data_dir", "out"),
}


def parse_widths(text: str) -> list[int]:
    """`"8,16,32,32"` -> `[8, 16, 32, 32]`."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


# ==================== PARSER ====================

def _add(parser: argparse.ArgumentParser, flag: str, **kwargs) -> None:
    parser.add_argument(flag, default=argparse.SUPPRESS, **kwargs)


def _switch(parser: argparse.ArgumentParser, flag: str, help: str) -> None:
    parser.add_argument(flag, action="store_const", const=True, default=argparse.SUPPRESS, help=help)


def _model_flags(parser: argparse.ArgumentParser) -> None:
    _add(parser, "--input-size", type=int, help="Square input side, multiple of 16")
    _add(parser, "--widths", type=parse_widths, help="Block widths, e.g. 32,64,128,128")
    _switch(parser, "--no-attention", "Drop the attention pre-processing layer")
    _switch(parser, "--no-cnc", "Drop the cosine-normalized branch")
    _switch(parser, "--no-dsc", "Drop the depthwise-separable branch")
    _switch(parser, "--no-mfe", "Drop the meta-feature branch")


def _data_flags(parser: argparse.ArgumentParser) -> None:
    _add(parser, "--train-fraction", type=float, help="Per-class share kept for training")
    _add(parser, "--augment-target", type=int, help="Grow each training class to this many images")
    _add(parser, "--subsample-normal", type=int, help="Keep this many normal images before splitting")


def build_parser() -> CliParser:
    parser = CliParser(prog="hybridcnn", description="Hybrid three-branch CNN for normal/abnormal image classification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliParser)
    sub.required = True

    def command(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        _add(p, "--config", help="JSON file with option values (flags override it)")
        return p

    for name, help in (("train", "Train a model and evaluate it on the held-out split"),
                       ("ablate", "Train and evaluate every ablation row")):
        p = command(name, help)
        _add(p, "--data-dir", help="Folder with normal/ and abnormal/ subfolders")
        _add(p, "--out", help="Checkpoint path (train) or JSON table (ablate)")
        _add(p, "--epochs", type=int)
        _add(p, "--lr", type=float, help="SGD learning rate")
        _add(p, "--batch", type=int, help="Mini-batch size")
        _add(p, "--seed", type=int)
        _add(p, "--val-fraction", type=float, help="Validation share of the training split, 0 disables it")
        _model_flags(p)
        _data_flags(p)

    p = command("eval", "Evaluate a checkpoint on a folder")
    _add(p, "--model")
    _add(p, "--data-dir")
    _add(p, "--report", help="Output JSON report")
    _add(p, "--batch", type=int)

    p = command("extract", "Export penultimate features as CSV")
    _add(p, "--model")
    _add(p, "--data-dir")
    _add(p, "--out")

    p = command("fit-ml", "Fit a classical classifier on exported features")
    _add(p, "--features")
    _add(p, "--algo", choices=["rf", "knn", "hinge"])
    _add(p, "--folds", type=int, help="1 = holdout, >1 = stratified cross-validation")
    _add(p, "--test-features", help="Holdout table; a stratified 20%% split is used when absent")
    _add(p, "--out", help="Where to save the fitted classifier")
    _add(p, "--report", help="Output JSON report")
    _add(p, "--seed", type=int)
    _add(p, "--n-estimators", type=int)
    _add(p, "--n-neighbors", type=int)

    p = command("gradcheck", "Finite-difference gradient verification")
    _add(p, "--scope", choices=["op", "model"])
    _add(p, "--seed", type=int)
    _add(p, "--report")

    p = command("gradcam", "Class-activation overlay for one image")
    _add(p, "--model")
    _add(p, "--image")
    _add(p, "--out")
    _add(p, "--branch", choices=["all", "cnc", "dsc", "mfe"])
    _add(p, "--target-class", type=int, choices=[0, 1])
    _add(p, "--sfm-dir", help="Also write the max/variance maps of every block")

    p = command("count", "Parameter and FLOP table")
    _model_flags(p)
    _add(p, "--out", help="Optional JSON table")

    p = command("manifest", "Dataset census CSV")
    _add(p, "--data-dir")
    _add(p, "--out")
    _add(p, "--seed", type=int)
    _add(p, "--input-size", type=int)
    _data_flags(p)

    return parser


# ==================== RESOLUTION ====================

@dataclass
class Invocation:
    """A parsed command with its fully resolved options."""

    command: str
    options: dict[str, Any]
    config_path: str | None = None
    flags: set[str] = field(default_factory=set)

    @property
    def seed(self) -> int | None:
        return self.options.get("seed")

    def describe(self) -> str:
        return f"command={self.command} seed={self.seed} config={json.dumps(self.options, sort_keys=True)}"


def read_config_file(path: str | Path, command: str) -> dict[str, Any]:
    """
    Load a flat JSON object of option values; dashed keys are accepted.

    Raises:
        BadPathError: File missing
        ConfigError: Not a JSON object, or a key the command does not know
    """
    path = Path(path)
    if not path.is_file():
        raise BadPathError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    values = {key.replace("-", "_"): value for key, value in raw.items()}
    unknown = sorted(set(values) - set(DEFAULTS[command]))
    if unknown:
        raise ConfigError(f"{path}: unknown option(s) for '{command}': {', '.join(unknown)}")
    return values


def resolve(command: str, flags: dict[str, Any], config_path: str | None = None) -> Invocation:
    """Merge defaults < config file < flags and check required options."""
    options = dict(DEFAULTS[command])
    if config_path:
        options.update(read_config_file(config_path, command))
    options.update(flags)
    missing = [name for name in REQUIRED[command] if options.get(name) is None]
    if missing:
        raise UsageError(f"{command}: missing required option(s) " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return Invocation(command=command, options=options, config_path=config_path, flags=set(flags))


def parse_invocation(argv: list[str]) -> Invocation:
    """
    Parse argv into an Invocation.

    Raises:
        UsageError: Unknown subcommand or flag, bad flag value, missing required option
        ConfigError: Bad `--config` contents
    """
    namespace = vars(build_parser().parse_args(argv))
    command = namespace.pop("command")
    config_path = namespace.pop("config", None)
    return resolve(command, namespace, config_path)
