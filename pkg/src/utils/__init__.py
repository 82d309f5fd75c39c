#!/usr/bin/env python3
"""
adsorbkit Utility Functions

Provides common utilities: retry logic for flaky local I/O, directory
helpers and content checksums.
"""

import functools
import hashlib
import time
from pathlib import Path
from typing import Callable, Optional, Tuple, Type, Union

from src.exceptions import RetryExhaustedError


def retry(
    max_attempts: int = 3,
    delay: float = 0.05,
    backoff: float = 2.0,
    exceptions: Tuple[Type[Exception], ...] = (OSError,),
    on_retry: Optional[Callable] = None,
):
    """
    Decorator to retry a function with exponential backoff.

    Args:
        max_attempts: Maximum number of attempts
        delay: Initial delay between attempts in seconds
        backoff: Multiplier for delay (exponential backoff)
        exceptions: Tuple of exceptions to catch and retry
        on_retry: Optional callback called as ``on_retry(attempt, exc)``

    Returns:
        Decorated function with retry logic

    Example:
        >>> @retry(max_attempts=20, exceptions=(ConnectionRefusedError,))
        ... def connect_to_peer():
        ...     return socket.create_connection(("127.0.0.1", port))
    """

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            attempt = 0
            current_delay = delay

            while attempt < max_attempts:
                try:
                    return func(*args, **kwargs)
                except exceptions as e:
                    attempt += 1
                    from src.logging import get_logger

                    logger = get_logger(__name__)

                    if attempt >= max_attempts:
                        logger.error(
                            f"{func.__name__} failed after {max_attempts} attempts"
                        )
                        raise RetryExhaustedError(
                            f"Failed after {max_attempts} attempts: {str(e)}",
                            attempts=max_attempts,
                        ) from e

                    logger.debug(
                        f"Attempt {attempt}/{max_attempts} failed for {func.__name__}: {str(e)}. "
                        f"Retrying in {current_delay:.2f}s..."
                    )

                    if on_retry:
                        on_retry(attempt, e)

                    time.sleep(current_delay)
                    current_delay *= backoff

        return wrapper

    return decorator


def ensure_directory(path: Union[str, Path]) -> Path:
    """
    Ensure a directory exists, creating it if necessary.

    Returns:
        The expanded directory path
    """
    directory = Path(path).expanduser()
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def file_checksum(path: Union[str, Path]) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(Path(path).expanduser(), "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


__all__ = [
    "retry",
    "ensure_directory",
    "file_checksum",
]
