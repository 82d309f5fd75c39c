#!/usr/bin/env python3
"""
Unit tests for the adsorbkit logging system.

Tests the LoggerManager singleton, file output formats, and the worker
rank attached to every record.
"""

import json
import logging
import threading

import pytest

from src.logging import (
    JsonFormatter,
    LoggerManager,
    RankFilter,
    clear_logs,
    current_worker_rank,
    get_log_files,
    get_logger,
    set_log_level,
    set_worker_rank,
    setup_logging,
)


@pytest.fixture(autouse=True)
def restore_logging():
    """Return the shared manager to console-only output after each test."""
    yield
    set_worker_rank(0, process_wide=True)
    setup_logging(log_level="WARNING", console_output=True, file_output=False)


def flush():
    for handler in logging.getLogger(LoggerManager.ROOT).handlers:
        handler.flush()


class TestLoggerManager:
    """Test suite for LoggerManager class."""

    def test_singleton_pattern(self):
        assert LoggerManager() is LoggerManager()

    def test_loggers_live_under_root(self):
        """Test module names are prefixed with the package namespace."""
        assert get_logger("trainer").name == "adsorbkit.trainer"
        assert get_logger("adsorbkit.cli").name == "adsorbkit.cli"
        assert get_logger().name == "adsorbkit"

    def test_logger_caching(self):
        assert get_logger("models.egnn") is get_logger("models.egnn")

    def test_root_does_not_propagate(self):
        assert not logging.getLogger(LoggerManager.ROOT).propagate

    def test_set_level(self):
        """Test the level reaches the root and every handler."""
        setup_logging(log_level="INFO")
        set_log_level("DEBUG")
        root = logging.getLogger(LoggerManager.ROOT)
        assert root.level == logging.DEBUG
        assert all(h.level == logging.DEBUG for h in root.handlers)

    def test_console_output_disabled(self):
        """Test no handler is attached without console or file output."""
        setup_logging(console_output=False)
        assert logging.getLogger(LoggerManager.ROOT).handlers == []

    def test_console_writes_to_stderr(self):
        from rich.logging import RichHandler

        setup_logging(console_output=True)
        (handler,) = logging.getLogger(LoggerManager.ROOT).handlers
        assert isinstance(handler, RichHandler)
        assert handler.console.stderr

    def test_file_output_needs_directory(self):
        """Test file output is dropped when no log_dir is given."""
        setup_logging(file_output=True, console_output=False)
        assert logging.getLogger(LoggerManager.ROOT).handlers == []


class TestFileOutput:
    """Records land in <log_dir>/adsorbkit.log."""

    def test_log_directory_creation(self, temp_dir):
        run_dir = temp_dir / "runs" / "demo"
        setup_logging(log_dir=str(run_dir), file_output=True, console_output=False)
        get_logger("trainer").info("epoch 1 done")
        flush()
        assert (run_dir / "adsorbkit.log").exists()

    def test_standard_format(self, temp_dir):
        setup_logging(log_dir=str(temp_dir), file_output=True, console_output=False)
        get_logger("trainer").info("epoch 1 done")
        flush()
        line = (temp_dir / "adsorbkit.log").read_text().strip()
        assert "| INFO     | rank 0 | adsorbkit.trainer | epoch 1 done" in line

    def test_debug_not_logged_at_info_level(self, temp_dir):
        setup_logging(log_dir=str(temp_dir), file_output=True, console_output=False)
        get_logger("trainer").debug("hidden")
        flush()
        assert "hidden" not in (temp_dir / "adsorbkit.log").read_text()

    def test_json_format(self, temp_dir):
        """Test JSON records carry logger, level, rank and message."""
        setup_logging(log_dir=str(temp_dir), file_output=True, console_output=False, log_format="json")
        set_worker_rank(2)
        get_logger("comm").warning("peer slow")
        flush()
        record = json.loads((temp_dir / "adsorbkit.log").read_text().splitlines()[-1])
        assert record["logger"] == "adsorbkit.comm"
        assert record["level"] == "WARNING"
        assert record["rank"] == 2
        assert record["message"] == "peer slow"

    def test_detailed_format(self, temp_dir):
        setup_logging(log_dir=str(temp_dir), file_output=True, console_output=False, log_format="detailed")
        get_logger("data").error("bad line")
        flush()
        assert "rank 0 | adsorbkit.data | ERROR" in (temp_dir / "adsorbkit.log").read_text()

    def test_get_and_clear_log_files(self, temp_dir):
        setup_logging(log_dir=str(temp_dir), file_output=True, console_output=False)
        get_logger("x").info("hello")
        flush()
        assert get_log_files() == [temp_dir / "adsorbkit.log"]
        setup_logging(log_dir=str(temp_dir), console_output=False)
        clear_logs()
        assert get_log_files() == []


class TestWorkerRank:
    """Worker ranks are tracked per thread."""

    def test_thread_local(self):
        """Test a rank set in one thread does not leak into another."""
        seen = {}

        def worker(rank):
            set_worker_rank(rank)
            seen[rank] = current_worker_rank()

        threads = [threading.Thread(target=worker, args=(r,)) for r in (1, 2, 3)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert seen == {1: 1, 2: 2, 3: 3}
        assert current_worker_rank() == 0

    def test_process_wide_default(self):
        """Test a process-wide rank applies to threads that never set one."""
        set_worker_rank(5, process_wide=True)
        result = []
        t = threading.Thread(target=lambda: result.append(current_worker_rank()))
        t.start()
        t.join()
        assert result == [5]

    def test_rank_filter(self):
        record = logging.LogRecord("adsorbkit", logging.INFO, __file__, 1, "msg", None, None)
        set_worker_rank(3)
        assert RankFilter().filter(record)
        assert record.rank == 3

    def test_json_formatter_includes_exception(self):
        try:
            raise ValueError("bad")
        except ValueError:
            import sys

            record = logging.LogRecord("adsorbkit", logging.ERROR, __file__, 1, "failed", None, sys.exc_info())
        payload = json.loads(JsonFormatter().format(record))
        assert "ValueError: bad" in payload["exception"]
        assert payload["rank"] == 0
