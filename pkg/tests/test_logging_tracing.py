from __future__ import annotations

import io
import json
import logging

import pytest

from app.core.config import settings
from app.core.error_reporting import error_payload, report_error
from app.core.errors import EXIT_CONFIG, EXIT_NUMERICAL, InvalidInput, StageFailed, UnboundedLaw
from app.core.logging import ContextFilter, JsonFormatter
from app.core.run_context import set_run_id, stage_scope


def _record(**extra) -> logging.LogRecord:
    record = logging.LogRecord("app.test", logging.INFO, __file__, 1, "hello", None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_context_filter_injects_run_and_stage() -> None:
    set_run_id("abc123")
    record = _record()
    with stage_scope("spectra"):
        assert ContextFilter().filter(record)
    assert record.run_id == "abc123"
    assert record.stage == "spectra"


def test_json_formatter_carries_extra_keys() -> None:
    record = _record(event="pipeline.stage.started", n=8, run_id="r1", stage="norms")
    payload = json.loads(JsonFormatter().format(record))
    assert payload["msg"] == "hello"
    assert payload["event"] == "pipeline.stage.started"
    assert payload["n"] == 8
    assert payload["run_id"] == "r1"
    assert payload["stage"] == "norms"
    assert "rows" not in payload


def test_stage_failure_payload_names_the_stage() -> None:
    set_run_id("run-1")
    err = StageFailed("converge", UnboundedLaw("too wide", details={"bound": 1.0}))
    stream = io.StringIO()
    code = report_error(err, stream=stream)

    assert code == EXIT_NUMERICAL
    payload = json.loads(stream.getvalue())
    assert payload["stage"] == "converge"
    assert payload["run_id"] == "run-1"


def test_unexpected_errors_become_internal_errors(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.WARNING, logger="app.core.error_reporting")
    stream = io.StringIO()
    code = report_error(RuntimeError("boom"), stream=stream)

    assert code == EXIT_NUMERICAL
    payload = json.loads(stream.getvalue())
    assert payload["error_code"] == "internal_error"
    assert payload["details"]["type"] == "RuntimeError"
    assert any(getattr(r, "event", None) == "run.failed" for r in caplog.records)


def test_details_are_hidden_in_prod(monkeypatch: pytest.MonkeyPatch) -> None:
    err = InvalidInput("bad", details={"path": "x.json"})
    assert error_payload(err)["details"] == {"path": "x.json"}
    monkeypatch.setattr(settings, "APP_ENV", "prod", raising=False)
    payload = error_payload(err)
    assert "details" not in payload
    assert payload["exit_code"] == EXIT_CONFIG
