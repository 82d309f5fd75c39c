#!/usr/bin/env python3
"""
adsorbkit Structured Logging System

Provides centralized logging configuration with support for:
- Console logging with colors (always on stderr; stdout carries CSV data)
- Optional rotating file logs inside a run directory
- Structured JSON logging
- Data-parallel worker rank on every record
"""

import contextlib
import json
import logging
import logging.handlers
import threading
from datetime import datetime
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

_rank_state = threading.local()
_process_rank = 0


def set_worker_rank(rank: int, process_wide: bool = False):
    """
    Tag subsequent log records from this thread with a worker rank.

    Args:
        rank: Data-parallel rank (coordinator is 0)
        process_wide: Also make it the default for threads that never set one
    """
    global _process_rank
    _rank_state.rank = rank
    if process_wide:
        _process_rank = rank


def current_worker_rank() -> int:
    """Return the rank attached to the calling thread."""
    return getattr(_rank_state, "rank", _process_rank)


class RankFilter(logging.Filter):
    """Attach the calling worker's rank to each record."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.rank = current_worker_rank()
        return True


class JsonFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record):
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "rank": getattr(record, "rank", 0),
            "function": record.funcName,
            "line": record.lineno,
            "message": record.getMessage(),
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data)


class LoggerManager:
    """
    Centralized logger management for adsorbkit.

    All loggers hang below the ``adsorbkit`` namespace so a single
    ``setup`` call reconfigures every module logger at once.
    """

    ROOT = "adsorbkit"

    _instance = None
    _initialized = False

    def __new__(cls):
        """Singleton pattern to ensure one logger manager."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        """Initialize the logger manager (only once)."""
        if not self._initialized:
            self.console = Console(stderr=True)
            self.loggers = {}
            self.log_dir: Optional[Path] = None
            self.log_level = logging.INFO
            self.console_output = True
            self.file_output = False
            self.log_format = "standard"
            self.max_bytes = 10 * 1024 * 1024
            self.backup_count = 3
            self._root = logging.getLogger(self.ROOT)
            self._root.propagate = False
            self._configure_root()
            self._initialized = True

    def setup(
        self,
        log_dir: Optional[str] = None,
        log_level: str = "INFO",
        console_output: bool = True,
        file_output: bool = False,
        log_format: str = "standard",
        max_bytes: int = 10 * 1024 * 1024,  # 10MB
        backup_count: int = 3,
    ):
        """
        Configure the logging system.

        Args:
            log_dir: Directory for log files (a run directory, usually)
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            console_output: Enable console logging on stderr
            file_output: Enable file logging (requires log_dir)
            log_format: File format style (standard, json, detailed)
            max_bytes: Max log file size before rotation
            backup_count: Number of backup log files to keep
        """
        self.log_dir = Path(log_dir).expanduser().absolute() if log_dir else None
        self.log_level = getattr(logging, log_level.upper(), logging.INFO)
        self.console_output = console_output
        self.file_output = file_output and self.log_dir is not None
        self.log_format = log_format
        self.max_bytes = max_bytes
        self.backup_count = backup_count

        if self.file_output:
            self.log_dir.mkdir(parents=True, exist_ok=True)

        self._configure_root()

    def _configure_root(self):
        for handler in list(self._root.handlers):
            self._root.removeHandler(handler)
            with contextlib.suppress(Exception):
                handler.close()
        self._root.setLevel(self.log_level)

        if self.console_output:
            self._root.addHandler(self._create_console_handler())
        if self.file_output:
            self._root.addHandler(self._create_file_handler())

    def get_logger(self, name: str) -> logging.Logger:
        """
        Get or create a logger with the specified name.

        Args:
            name: Logger name (typically __name__ of the module)

        Returns:
            Logger that propagates into the configured ``adsorbkit`` root
        """
        if name in self.loggers:
            return self.loggers[name]

        qualified = name if name.startswith(self.ROOT) else f"{self.ROOT}.{name}"
        logger = logging.getLogger(qualified)
        self.loggers[name] = logger
        return logger

    def _create_console_handler(self) -> logging.Handler:
        """Create a Rich console handler bound to stderr."""
        handler = RichHandler(
            console=self.console,
            show_time=True,
            show_path=False,
            markup=False,
            rich_tracebacks=True,
            tracebacks_show_locals=False,
        )
        handler.setLevel(self.log_level)
        handler.addFilter(RankFilter())
        handler.setFormatter(logging.Formatter("[rank %(rank)s] %(message)s"))
        return handler

    def _create_file_handler(self) -> logging.Handler:
        """Create a rotating file handler inside the log directory."""
        handler = logging.handlers.RotatingFileHandler(
            self.log_dir / "adsorbkit.log",
            maxBytes=self.max_bytes,
            backupCount=self.backup_count,
            encoding="utf-8",
        )
        handler.setLevel(self.log_level)
        handler.addFilter(RankFilter())

        if self.log_format == "json":
            formatter = JsonFormatter()
        elif self.log_format == "detailed":
            formatter = logging.Formatter(
                "%(asctime)s | rank %(rank)s | %(name)s | %(levelname)-8s | %(funcName)s:%(lineno)d | %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        else:  # standard
            formatter = logging.Formatter(
                "%(asctime)s | %(levelname)-8s | rank %(rank)s | %(name)s | %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )

        handler.setFormatter(formatter)
        return handler

    def set_level(self, level: str):
        """
        Change log level for every handler.

        Args:
            level: New log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        """
        self.log_level = getattr(logging, level.upper(), logging.INFO)
        self._root.setLevel(self.log_level)
        for handler in self._root.handlers:
            handler.setLevel(self.log_level)

    def get_log_files(self) -> list:
        """Return all log files in the configured directory."""
        if not self.log_dir or not self.log_dir.exists():
            return []

        return sorted(self.log_dir.glob("*.log*"))

    def clear_logs(self):
        """Delete all log files."""
        for log_file in self.get_log_files():
            with contextlib.suppress(OSError):
                log_file.unlink()


# Global logger manager instance
_manager = LoggerManager()


def setup_logging(
    log_dir: Optional[str] = None,
    log_level: str = "INFO",
    console_output: bool = True,
    file_output: bool = False,
    log_format: str = "standard",
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 3,
):
    """
    Configure the adsorbkit logging system.

    This should be called once at application startup (the CLI does it
    per command, pointing ``log_dir`` at the run directory).

    Example:
        >>> setup_logging(log_dir="runs/demo", file_output=True, log_format="json")
    """
    _manager.setup(
        log_dir=log_dir,
        log_level=log_level,
        console_output=console_output,
        file_output=file_output,
        log_format=log_format,
        max_bytes=max_bytes,
        backup_count=backup_count,
    )


def get_logger(name: str = None) -> logging.Logger:
    """
    Get a logger for the specified module.

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.info("epoch 3 finished")
    """
    if name is None:
        name = LoggerManager.ROOT

    return _manager.get_logger(name)


def set_log_level(level: str):
    """Change the log level for all handlers."""
    _manager.set_level(level)


def get_log_files() -> list:
    """Get list of all log files."""
    return _manager.get_log_files()


def clear_logs():
    """Delete all log files."""
    _manager.clear_logs()


# Export public API
__all__ = [
    "setup_logging",
    "get_logger",
    "set_log_level",
    "set_worker_rank",
    "current_worker_rank",
    "get_log_files",
    "clear_logs",
    "LoggerManager",
    "RankFilter",
    "JsonFormatter",
]
