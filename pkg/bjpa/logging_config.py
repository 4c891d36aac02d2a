"""
Logging configuration: JSON lines for machine consumption, plain text for humans
"""
import logging
import sys

from pythonjsonlogger import jsonlogger

TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
JSON_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'


def setup_logging(level: str = "INFO", fmt: str = "json") -> logging.Logger:
    """
    Configure the package logger.

    Records go to stderr so that stdout stays free for command reports.
    Structured context is passed with ``extra={...}`` and ends up as JSON keys.
    """
    if fmt == "json":
        formatter = jsonlogger.JsonFormatter(JSON_FORMAT)
    else:
        formatter = logging.Formatter(TEXT_FORMAT)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    logger = logging.getLogger("bjpa")
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    # Prevent duplicate logs
    logger.propagate = False

    logger.debug('Logging configured', extra={'event_type': 'logging_setup', 'format': fmt})
    return logger
