"""
Tests for logging setup and the structured logger.

These tests verify:
- Root level and the console handler after setup
- The per-run log file and its removal afterwards
- Context prefixes and context extension
"""

import logging

from rich.logging import RichHandler

from qfb.utils.logging import RUN_LOG_NAME, StructuredLogger, run_log, setup_logging


def test_setup_logging_sets_level():
    """Test that the root logger takes the requested level and one rich handler."""
    root = setup_logging(level="DEBUG")

    assert root.level == logging.DEBUG
    assert len(root.handlers) == 1
    assert isinstance(root.handlers[0], RichHandler)


def test_setup_logging_unknown_level_defaults_to_info():
    root = setup_logging(level="CHATTY")

    assert root.level == logging.INFO


def test_setup_logging_replaces_handlers():
    setup_logging(level="INFO")
    root = setup_logging(level="WARNING")

    assert len(root.handlers) == 1


def test_run_log_collects_package_records(tmp_path):
    """Test that qfb records land in run.log and other loggers stay out."""
    setup_logging(level="INFO")

    with run_log(tmp_path) as path:
        logging.getLogger("qfb.experiments").info("inside the run")
        logging.getLogger("elsewhere").warning("not ours")

    text = path.read_text(encoding="utf-8")
    assert path == tmp_path / RUN_LOG_NAME
    assert "qfb.experiments - INFO - inside the run" in text
    assert "not ours" not in text


def test_run_log_detaches_after_the_run(tmp_path):
    setup_logging(level="INFO")
    package = logging.getLogger("qfb")
    before = list(package.handlers)

    with run_log(tmp_path) as path:
        assert len(package.handlers) == len(before) + 1
    logging.getLogger("qfb.experiments").info("after the run")

    assert package.handlers == before
    assert "after the run" not in path.read_text(encoding="utf-8")


def test_structured_logger_prefix(caplog):
    """Test that context is rendered in front of the message."""
    log = StructuredLogger("qfb.test", experiment="reset-sweep", seed=7)

    with caplog.at_level(logging.INFO, logger="qfb.test"):
        log.info("done in %s s", 3)

    assert "[experiment=reset-sweep seed=7] done in 3 s" in caplog.text


def test_structured_logger_without_context(caplog):
    log = StructuredLogger("qfb.test")

    with caplog.at_level(logging.INFO, logger="qfb.test"):
        log.info("plain")

    assert caplog.records[-1].getMessage() == "plain"


def test_structured_logger_add_context(caplog):
    """Test that add_context returns an extended logger and leaves the original alone."""
    base = StructuredLogger("qfb.test", experiment="tomo-demo")
    log = base.add_context(stage="mle")

    with caplog.at_level(logging.WARNING, logger="qfb.test"):
        log.warning("slow")

    assert "[experiment=tomo-demo stage=mle] slow" in caplog.text
    assert dict(base.context) == {"experiment": "tomo-demo"}
