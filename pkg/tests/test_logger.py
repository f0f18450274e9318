"""
Tests for the Rich logging helpers.
"""
import logging
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from logger import get_logger, log_event, log_stage, set_level


def test_log_event_tags_the_message(caplog):
    caplog.set_level(logging.INFO)
    log_event(get_logger("zfstats.test"), "outage", "RMSE %.3f", 0.0126)
    record = caplog.records[-1]
    assert record.levelno == logging.INFO
    assert record.getMessage() == "[event.outage]OUTAGE[/event.outage]: RMSE 0.013"


def test_log_stage_reports_elapsed_time(caplog):
    caplog.set_level(logging.DEBUG)
    with log_stage(get_logger("zfstats.test"), "campaign", "Drop loop"):
        pass
    message = caplog.records[-1].getMessage()
    assert "CAMPAIGN" in message
    assert "Drop loop took" in message
    assert caplog.records[-1].levelno == logging.DEBUG


def test_set_level_accepts_names():
    root = logging.getLogger()
    previous = root.level
    try:
        set_level("warning")
        assert root.level == logging.WARNING
        set_level("chatty")
        assert root.level == logging.INFO
    finally:
        root.setLevel(previous)
