#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for log.py module
"""
import argparse
import logging

import pytest

from kdgan import log as klog


class TestLoggingConfig:
    """Test the console configuration dict"""

    def test_color(self):
        config = klog.get_logging_config()
        assert config["handlers"]["console"]["formatter"] == "color"
        assert config["handlers"]["console"]["level"] == "INFO"
        assert config["formatters"]["color"]["()"] == "colorlog.ColoredFormatter"
        assert klog.LOGGER_NAME in config["loggers"]

    def test_no_color(self):
        config = klog.get_logging_config("warning", no_color=True)
        assert config["handlers"]["console"]["formatter"] == "plain"
        assert config["handlers"]["console"]["level"] == "WARNING"

    def test_invalid_level(self):
        with pytest.raises(ValueError):
            klog.get_logging_config("verbose")


class TestSetupLogging:
    """Test setup_logging function"""

    def test_console_only(self, reset_logging):
        klog.setup_logging()
        logger = logging.getLogger("kdgan")
        (handler,) = logger.handlers
        assert isinstance(handler, logging.StreamHandler)
        assert logger.level == logging.DEBUG

    def test_console_level(self, reset_logging):
        klog.setup_logging(console_level="error", no_color=True)
        (handler,) = logging.getLogger("kdgan").handlers
        assert handler.level == logging.ERROR

    def test_caplog_sees_records(self, caplog, reset_logging):
        klog.setup_logging(console_level="warning")
        with caplog.at_level(logging.INFO):
            logging.getLogger("kdgan.test").info("Info message")
        assert "Info message" in caplog.text


class TestRunLog:
    """Test the run log file"""

    def test_records_within_context(self, tmp_path, reset_logging):
        path = tmp_path / "kdgan.log"
        with klog.run_log(str(path)) as handler:
            logging.getLogger("kdgan.data").debug("Loaded dataset")
            assert handler in logging.getLogger("kdgan").handlers
        logging.getLogger("kdgan.data").info("After the run")
        assert handler not in logging.getLogger("kdgan").handlers
        text = path.read_text()
        assert "Loaded dataset" in text
        assert "After the run" not in text

    def test_removed_on_error(self, tmp_path, reset_logging):
        before = list(logging.getLogger("kdgan").handlers)
        with pytest.raises(RuntimeError):
            with klog.run_log(str(tmp_path / "kdgan.log")):
                raise RuntimeError("failed run")
        assert logging.getLogger("kdgan").handlers == before


class TestParserArguments:
    """Test argument parser helpers"""

    def test_arguments(self):
        parser = argparse.ArgumentParser()
        klog.add_logging_parser_arguments(parser)
        args = parser.parse_args(["--log-level", "debug", "--log-no-color"])
        assert args.log_level == "debug"
        assert args.log_no_color is True

    def test_defaults(self):
        parser = argparse.ArgumentParser()
        klog.add_logging_parser_arguments(parser, default_level="warning")
        args = parser.parse_args([])
        assert args.log_level == "warning"
        assert args.log_no_color is False

    @pytest.mark.parametrize("level", klog.LOG_LEVELS)
    def test_levels(self, level):
        parser = argparse.ArgumentParser()
        klog.add_logging_parser_arguments(parser)
        assert parser.parse_args(["--log-level", level]).log_level == level

    def test_invalid_level(self):
        parser = argparse.ArgumentParser()
        klog.add_logging_parser_arguments(parser)
        with pytest.raises(SystemExit):
            parser.parse_args(["--log-level", "invalid"])

    def test_main_setup_logging(self, reset_logging):
        parser = argparse.ArgumentParser()
        klog.add_logging_parser_arguments(parser)
        klog.main_setup_logging(parser.parse_args(["--log-level", "info", "--log-no-color"]))
        (handler,) = logging.getLogger("kdgan").handlers
        assert handler.level == logging.INFO
