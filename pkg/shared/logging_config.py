"""Logging for the library and the CLI.

Library modules log to ``pppconc.<module>`` loggers and never attach handlers
themselves; the CLI calls ``setup_logging`` once at start-up.
"""

import logging
import sys
from typing import Literal

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(name: str = "pppconc", level: LogLevel = "INFO") -> logging.Logger:
    """
    Attach one stdout handler to the ``name`` logger and set its level.

    Calling again only changes the level. numpy and scipy RuntimeWarnings
    (overflow in exp, mean of an empty slice) are routed through the
    ``py.warnings`` logger so they share the stream and format.

    Args:
        name: Top-level logger name
        level: Logging level

    Returns:
        The configured logger
    """
    numeric = getattr(logging, level)
    logger = logging.getLogger(name)
    logger.setLevel(numeric)

    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(numeric)
        return logger

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(numeric)
    handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(handler)

    logging.captureWarnings(True)
    warnings_logger = logging.getLogger("py.warnings")
    if not warnings_logger.handlers:
        warnings_logger.addHandler(handler)

    return logger
