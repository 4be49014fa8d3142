"""Central logging setup for TermNMT.

Library modules only call `get_logger("TermNMT.<Area>")`; handlers are
attached by the command-line entry point through `setup_logging()`, which
writes a rotating log file and optionally mirrors records to stderr.

Usage:
    from TermNMT.logger.logging_config import setup_logging, get_logger
    setup_logging(console_level="INFO")
    logger = get_logger("TermNMT.Example")
"""

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

DEFAULT_LOG_DIR_NAME = ".termnmt"
DEFAULT_LOG_FILE = "termnmt.log"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
PACKAGE_LOGGER = "TermNMT"

# Silent until setup_logging attaches handlers
logging.getLogger(PACKAGE_LOGGER).addHandler(logging.NullHandler())

_log_file_path: Optional[Path] = None
_handlers: list = []


def _resolve_log_dir(log_dir: Optional[str]) -> Path:
    directory = Path(log_dir).expanduser() if log_dir else Path.home() / DEFAULT_LOG_DIR_NAME
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError:
        logging.getLogger(PACKAGE_LOGGER).error(
            f"Failed to create log directory at {directory}, falling back to current working directory.",
            exc_info=True,
        )
        directory = Path.cwd()
    return directory


def _console_level(level: str) -> int:
    value = logging.getLevelName(level.upper())
    if not isinstance(value, int):
        raise ValueError(f"Unknown log level {level!r}")
    return value


def setup_logging(
    log_dir: Optional[str] = None,
    max_bytes: int = 5 * 1024 * 1024,
    backup_count: int = 3,
    console_level: Optional[str] = None,
) -> Path:
    """Attach a rotating file handler (DEBUG) and an optional stderr handler to the package logger.

    Repeated calls return the existing log file and leave the handlers alone;
    call `reset_logging()` first to reconfigure.

    Args:
        log_dir: Directory for the log file (default ~/.termnmt)
        max_bytes: Rotation threshold of the log file
        backup_count: Number of rotated files kept
        console_level: When set (e.g. "INFO"), also log to stderr at that level

    Returns:
        Path to the log file
    """
    global _log_file_path

    if _log_file_path is not None:
        return _log_file_path

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    log_file = _resolve_log_dir(log_dir) / DEFAULT_LOG_FILE
    file_handler = RotatingFileHandler(str(log_file), maxBytes=max_bytes, backupCount=backup_count, encoding="utf-8")
    file_handler.setFormatter(formatter)
    file_handler.setLevel(logging.DEBUG)
    _handlers.append(file_handler)

    if console_level:
        console = logging.StreamHandler()
        console.setFormatter(formatter)
        console.setLevel(_console_level(console_level))
        _handlers.append(console)

    package = logging.getLogger(PACKAGE_LOGGER)
    package.setLevel(logging.DEBUG)
    for handler in _handlers:
        package.addHandler(handler)

    _log_file_path = log_file
    return _log_file_path


def reset_logging():
    """Detach and close the handlers installed by setup_logging"""
    global _log_file_path
    package = logging.getLogger(PACKAGE_LOGGER)
    while _handlers:
        handler = _handlers.pop()
        package.removeHandler(handler)
        handler.close()
    _log_file_path = None


def get_logger(name: str) -> logging.Logger:
    """Return a logger for the given name; records reach the handlers only after setup_logging()"""
    return logging.getLogger(name)


def get_log_file_path() -> Optional[Path]:
    return _log_file_path
