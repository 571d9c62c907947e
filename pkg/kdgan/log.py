#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Console and run log setup

The console handler is configured once by the command line. Each run then
attaches its own DEBUG file handler with :func:`run_log` so that
:file:`{run_dir}/log/kdgan.log` holds the full loss routing and progress
records of that run only.
"""
import contextlib
import logging.config
import logging.handlers

#: Root logger of the package
LOGGER_NAME = "kdgan"

#: Choices of the ``--log-level`` option
LOG_LEVELS = ("debug", "info", "warning", "error", "critical")

LOG_COLORS = {
    "DEBUG": "thin",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "red,bg_white",
}

CONSOLE_FORMAT = "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s"
PLAIN_FORMAT = "%(levelname)-8s %(name)s: %(message)s"
RUN_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"

#: Size of a run log before rotation
RUN_LOG_MAX_BYTES = 10 * 1024**2


def get_logging_config(console_level="info", no_color=False):
    """Build the :func:`logging.config.dictConfig` dict of the console handler

    Parameters
    ----------
    console_level: str
        One of :data:`LOG_LEVELS`
    no_color: bool
        Use a plain formatter instead of :class:`colorlog.ColoredFormatter`

    Return
    ------
    dict
    """
    if console_level.lower() not in LOG_LEVELS:
        raise ValueError(f"Invalid log level: {console_level}. Choose one of: {', '.join(LOG_LEVELS)}")
    formatters = {
        "color": {"()": "colorlog.ColoredFormatter", "format": CONSOLE_FORMAT, "log_colors": LOG_COLORS},
        "plain": {"format": PLAIN_FORMAT},
    }
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": formatters,
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "plain" if no_color else "color",
                "level": console_level.upper(),
            },
        },
        "loggers": {LOGGER_NAME: {"handlers": ["console"], "level": "DEBUG"}},
    }


def setup_logging(console_level="info", no_color=False):
    logging.config.dictConfig(get_logging_config(console_level, no_color))
    logging.getLogger(__name__).debug(f"Console logging at level {console_level.upper()}")


def add_logging_parser_arguments(parser, default_level="info"):
    parser.add_argument(
        "--log-level", help="console logging level", choices=LOG_LEVELS, default=default_level
    )
    parser.add_argument("--log-no-color", help="suppress colors in console", action="store_true")


def main_setup_logging(args):
    setup_logging(console_level=args.log_level, no_color=args.log_no_color)


@contextlib.contextmanager
def run_log(path, level="DEBUG"):
    """Send the ``kdgan`` records to a run log file within the context

    The package logger is set to DEBUG when it has no level yet, so that
    library use without :func:`setup_logging` still fills the file.
    """
    handler = logging.handlers.RotatingFileHandler(path, maxBytes=RUN_LOG_MAX_BYTES, backupCount=1)
    handler.setFormatter(logging.Formatter(RUN_FORMAT))
    handler.setLevel(level)
    logger = logging.getLogger(LOGGER_NAME)
    if logger.level == logging.NOTSET:
        logger.setLevel(logging.DEBUG)
    logger.addHandler(handler)
    try:
        yield handler
    finally:
        logger.removeHandler(handler)
        handler.close()
