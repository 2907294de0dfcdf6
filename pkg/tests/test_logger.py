"""Tests for the logger module."""

import io
import logging
import sys

import pytest

from nru_offload.logger import level_from_name, setup_logger


def test_setup_logger_default():
    """Test setup_logger with default parameters."""
    logger = setup_logger("test_logger1")

    assert logger.name == "test_logger1"
    assert logger.level == logging.INFO
    assert len(logger.handlers) == 1
    assert isinstance(logger.handlers[0], logging.StreamHandler)


def test_setup_logger_package_name():
    """Test that the default logger is the package logger."""
    logger = setup_logger()
    assert logger.name == "nru_offload"


def test_setup_logger_custom_format():
    """Test setup_logger with custom format string."""
    custom_format = "%(levelname)s - %(message)s"
    logger = setup_logger("test_logger3", format_string=custom_format)

    handler = logger.handlers[0]
    assert handler.formatter is not None
    assert handler.formatter._fmt == custom_format


def test_setup_logger_no_duplicate_handlers():
    """Test that setup_logger doesn't create duplicate handlers."""
    logger1 = setup_logger("test_logger4")
    logger2 = setup_logger("test_logger4", level=logging.DEBUG)

    assert logger1 is logger2
    assert len(logger2.handlers) == 1
    assert logger2.level == logging.DEBUG


def test_logger_level_filtering(caplog):
    """Test that logger filters messages based on level."""
    logger = setup_logger("test_logger6", level=logging.WARNING)

    with caplog.at_level(logging.DEBUG):
        logger.debug("Debug message")
        logger.info("Info message")
        logger.warning("Warning message")

    assert "Debug message" not in caplog.text
    assert "Info message" not in caplog.text
    assert "Warning message" in caplog.text


@pytest.mark.parametrize(
    "name, level",
    [("debug", logging.DEBUG), ("INFO", logging.INFO), ("Warning", logging.WARNING)],
)
def test_level_from_name(name, level):
    """Test level names are case-insensitive."""
    assert level_from_name(name) == level


def test_level_from_name_unknown():
    """Test unknown level names are rejected."""
    with pytest.raises(ValueError, match="Unknown log level"):
        level_from_name("verbose")


def test_setup_logger_writes_stdout(monkeypatch):
    """Test the console handler writes to standard output."""
    stream = io.StringIO()
    monkeypatch.setattr(sys, "stdout", stream)
    logger = setup_logger("test_logger7")

    assert logger.handlers[0].stream is stream
    logger.info("to stdout")
    assert "to stdout" in stream.getvalue()
