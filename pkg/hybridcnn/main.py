"""Command-line entry point."""

import logging
import sys
from typing import Optional

from hybridcnn.cli.commands import dispatch
from hybridcnn.cli.deps import get_pipeline_service
from hybridcnn.cli.parser import parse_invocation
from hybridcnn.core.config import settings
from hybridcnn.core.errors import HybridCNNError
from hybridcnn.services.pipeline_service import PipelineService

logger = logging.getLogger(__name__)

INTERNAL_EXIT_CODE = 2


def configure_logging(level: str | None = None, log_file: str | None = None) -> None:
    """Log to stdout, and also to `log_file` (or `settings.LOG_FILE`) when set."""
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    log_file = log_file or settings.LOG_FILE
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode="a", encoding="utf-8"))
    logging.basicConfig(
        level=level or ("DEBUG" if settings.DEBUG else settings.LOG_LEVEL),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )

    # Silence noisy third-party loggers
    logging.getLogger("PIL").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def report_error(exc: BaseException) -> int:
    """Print the single `error kind=... message=...` line and return the exit code."""
    if isinstance(exc, HybridCNNError):
        kind, code = exc.kind, exc.exit_code
    else:
        kind, code = "internal", INTERNAL_EXIT_CODE
    message = " ".join(str(exc).split()) or type(exc).__name__
    print(f"error kind={kind} message={message}", file=sys.stderr)
    return code


def run(argv: Optional[list[str]] = None, service: Optional[PipelineService] = None) -> int:
    """
    Parse `argv`, run the command and map failures to exit codes.

    Returns:
        0 success, 1 usage/config/path error, 2 runtime failure, 3 gradient check failure
    """
    argv = sys.argv[1:] if argv is None else argv
    try:
        invocation = parse_invocation(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except HybridCNNError as exc:
        return report_error(exc)

    configure_logging()
    print(f"resolved {invocation.describe()}")
    try:
        return dispatch(invocation, service or get_pipeline_service())
    except HybridCNNError as exc:
        logger.error(f"❌ {invocation.command} failed: {exc}")
        return report_error(exc)
    except Exception as exc:
        logger.exception(f"❌ {invocation.command} crashed")
        return report_error(exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
