"""Logging configuration for the application."""
import logging
import sys
from pathlib import Path
from typing import Optional

from config import LOG_CONFIG


def setup_logger(
    name: str,
    log_file: Optional[str] = None,
    level: int = logging.INFO,
    format_string: Optional[str] = None,
) -> logging.Logger:
    """Set up a logger with console and optional file handlers.

    The console handler writes to stderr so that artifacts written to stdout
    stay machine readable.

    Args:
        name: Name of the logger
        log_file: Optional path to log file
        level: Logging level
        format_string: Optional custom format string

    Returns:
        logging.Logger: Configured logger instance
    """
    if format_string is None:
        format_string = LOG_CONFIG["format"]

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Handlers are attached once per logger name
    if logger.handlers:
        return logger

    formatter = logging.Formatter(format_string)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def set_level(level_name: str) -> None:
    """Change the application log level, e.g. from the ``--log-level`` flag."""
    app_logger.setLevel(getattr(logging, level_name.upper(), logging.INFO))


# Create default application logger
app_logger = setup_logger(
    LOG_CONFIG["name"],
    log_file=LOG_CONFIG["file"],
    level=getattr(logging, str(LOG_CONFIG["level"]).upper(), logging.INFO),
)
