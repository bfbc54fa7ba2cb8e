"""Tests for structured logging."""

import io
import json
import os

import numpy as np
import pytest
import structlog

from src.core.config import Settings
from src.utils.logger import configure_logging, get_logger, numpy_to_builtin


@pytest.fixture()
def log_stream():
    stream = io.StringIO()
    yield stream
    configure_logging()


def test_numpy_values_become_builtins():
    event = numpy_to_builtin(
        None,
        "info",
        {"event": "kernel_computed", "dimension": np.int64(23), "gap": np.float64(0.5),
         "ranks": np.array([1, 2]), "shape": (np.int64(4), 5)},
    )
    assert type(event["dimension"]) is int
    assert type(event["gap"]) is float
    assert event["ranks"] == [1, 2]
    assert event["shape"] == [4, 5]
    assert type(event["shape"][0]) is int


def test_json_lines_carry_component_and_process(log_stream):
    configure_logging(level="INFO", fmt="json", stream=log_stream)
    get_logger("qsat").info("kernel_computed", dimension=np.int64(3))
    (line,) = log_stream.getvalue().splitlines()
    record = json.loads(line)
    assert record["event"] == "kernel_computed"
    assert record["component"] == "qsat"
    assert record["dimension"] == 3
    assert record["level"] == "info"
    assert record["process"] == os.getpid()
    assert "timestamp" in record


def test_level_filters_events(log_stream):
    configure_logging(level="WARNING", stream=log_stream)
    logger = structlog.get_logger()
    logger.info("scan_point_complete")
    logger.warning("sat_undecided")
    lines = log_stream.getvalue().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["event"] == "sat_undecided"


def test_console_format(log_stream):
    configure_logging(level="DEBUG", fmt="console", stream=log_stream)
    get_logger("matching").debug("matching_computed", size=7)
    output = log_stream.getvalue()
    assert "matching_computed" in output
    assert "size=7" in output


def test_log_settings_are_validated():
    with pytest.raises(ValueError):
        Settings(LOG_FORMAT="xml")
    with pytest.raises(ValueError):
        Settings(LOG_LEVEL="LOUD")
