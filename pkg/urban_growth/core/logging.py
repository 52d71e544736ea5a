"""
Logging configuration for the command-line tools.
Console output goes to stderr so stdout stays free for command output.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from urban_growth.core.config import settings

APP_LOGGER = "urban_growth"


def setup_logging(debug: Optional[bool] = None, log_dir: Optional[str] = None) -> logging.Logger:
    """
    Configure application logging.

    Args:
        debug: Force DEBUG level; defaults to ``settings.DEBUG``.
        log_dir: Directory for log files; defaults to ``settings.LOG_DIR``.
            Empty means console only.

    Returns:
        The application logger.
    """
    debug = settings.DEBUG if debug is None else debug
    log_dir = settings.LOG_DIR if log_dir is None else log_dir
    log_level = logging.DEBUG if debug else logging.INFO

    detailed_formatter = logging.Formatter(
        fmt="%(asctime)s | %(levelname)-8s | %(name)s:%(funcName)s:%(lineno)d | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    simple_formatter = logging.Formatter(
        fmt="%(asctime)s | %(levelname)-8s | %(message)s",
        datefmt="%H:%M:%S",
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(simple_formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    root_logger.handlers.clear()
    root_logger.addHandler(console_handler)

    log_filename = None
    if log_dir:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        stamp = datetime.now().strftime("%Y-%m-%d")

        log_filename = directory / f"urban_growth_{stamp}.log"
        file_handler = logging.FileHandler(log_filename, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(detailed_formatter)
        root_logger.addHandler(file_handler)

        error_handler = logging.FileHandler(directory / f"errors_{stamp}.log", encoding="utf-8")
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(detailed_formatter)
        root_logger.addHandler(error_handler)

    app_logger = logging.getLogger(APP_LOGGER)
    app_logger.setLevel(log_level)

    app_logger.debug(
        f"Logging initialized | Level: {logging.getLevelName(log_level)} | Log file: {log_filename or '-'}"
    )
    return app_logger
