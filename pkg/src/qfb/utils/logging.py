"""
Logging for qfb.

The console gets a RichHandler on stderr. Each experiment run also keeps a
plain-text `run.log` next to its artifacts while it executes (`run_log`).
Context such as the experiment name and seed is carried by
`StructuredLogger` as a `[key=value ...]` prefix.
"""

import logging
from collections.abc import Iterator, Mapping, MutableMapping
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.logging import RichHandler

RUN_LOG_NAME = "run.log"
PACKAGE_LOGGER = "qfb"
RUN_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    level: str = "INFO",
    rich_tracebacks: bool = True,
    show_time: bool = True,
) -> logging.Logger:
    """
    Send log records to a rich console on stderr.

    Unknown level names fall back to INFO. Any handlers already on the root
    logger are replaced.

    Returns:
        Root logger instance
    """
    numeric_level = logging.getLevelNamesMapping().get(level.upper(), logging.INFO)

    # Messages carry literal [key=value] prefixes, so rich markup stays off
    console_handler = RichHandler(
        console=Console(stderr=True),
        rich_tracebacks=rich_tracebacks,
        show_time=show_time,
        show_path=False,
        markup=False,
    )
    console_handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    root_logger.handlers = [console_handler]
    return root_logger


@contextmanager
def run_log(out_dir: Path) -> Iterator[Path]:
    """
    Copy qfb log records into out_dir/run.log while the block runs.

    The file is rewritten for every run and is not a checksummed artifact.
    """
    path = out_dir / RUN_LOG_NAME
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(RUN_LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    package_logger = logging.getLogger(PACKAGE_LOGGER)
    package_logger.addHandler(handler)
    try:
        yield path
    finally:
        package_logger.removeHandler(handler)
        handler.close()


class StructuredLogger(logging.LoggerAdapter[logging.Logger]):
    """
    Logger adapter that prefixes every message with its context.

    Usage:
        log = StructuredLogger("qfb.experiments", experiment="reset-sweep", seed=7)
        log.info("Starting sweep")
        # Output: [experiment=reset-sweep seed=7] Starting sweep
    """

    def __init__(self, name: str, **context: Any) -> None:
        super().__init__(logging.getLogger(name), context)

    @property
    def context(self) -> Mapping[str, object]:
        return self.extra or {}

    def process(
        self, msg: Any, kwargs: MutableMapping[str, Any]
    ) -> tuple[Any, MutableMapping[str, Any]]:
        if not self.context:
            return msg, kwargs
        prefix = " ".join(f"{k}={v}" for k, v in self.context.items())
        return f"[{prefix}] {msg}", kwargs

    def add_context(self, **context: Any) -> "StructuredLogger":
        """New logger with these fields added to (or replacing) the current context."""
        return StructuredLogger(self.logger.name, **{**self.context, **context})
