"""Command-line surface."""

from hybridcnn.cli.commands import HANDLERS, dispatch
from hybridcnn.cli.parser import COMMANDS, Invocation, build_parser, parse_invocation

__all__ = ["COMMANDS", "HANDLERS", "Invocation", "build_parser", "dispatch", "parse_invocation"]
