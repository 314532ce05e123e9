from __future__ import annotations

import json
import logging
import math
import sys
from fractions import Fraction
from typing import Any, TextIO

import numpy as np

from app.core.config import settings
from app.core.errors import EXIT_NUMERICAL, DomainError, from_domain_error
from app.core.run_context import get_run_id, get_stage

logger = logging.getLogger(__name__)

# Central error-report layer:
#  - catches exceptions at the CLI boundary
#  - logs unexpected ones
#  - converts them into a uniform JSON error format on stderr


def to_jsonable(value: Any) -> Any:
    if value is None or isinstance(value, (str, int, bool)):
        return value

    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)

    if isinstance(value, Fraction):
        return [value.numerator, value.denominator]

    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())

    if isinstance(value, np.generic):
        return to_jsonable(value.item())

    if isinstance(value, complex):
        return [value.real, value.imag]

    if isinstance(value, dict):
        return {str(key): to_jsonable(val) for key, val in value.items()}

    if isinstance(value, (list, tuple, set)):
        return [to_jsonable(item) for item in value]

    return str(value)


def error_payload(err: BaseException) -> dict[str, Any]:
    if isinstance(err, DomainError):
        base = from_domain_error(err)
        payload: dict[str, Any] = {
            "error_code": base.error_code,
            "message": base.message,
            "exit_code": base.exit_code,
        }
        details = base.details
    else:
        payload = {
            "error_code": "internal_error",
            "message": "Internal error.",
            "exit_code": EXIT_NUMERICAL,
        }
        details = {"type": type(err).__name__, "message": str(err)}

    payload["run_id"] = get_run_id()
    payload["stage"] = getattr(err, "stage", None) or get_stage()
    if settings.APP_ENV != "prod" and details is not None:
        payload["details"] = to_jsonable(details)
    return payload


def exit_code_for(err: BaseException) -> int:
    if isinstance(err, DomainError):
        return err.exit_code
    return EXIT_NUMERICAL


def report_error(err: BaseException, *, stream: TextIO | None = None) -> int:
    """
    Write the error payload to stderr and return the exit code.
    """
    if isinstance(err, DomainError):
        logger.warning(
            "run failed",
            extra={
                "event": "run.failed",
                "error_code": err.error_code,
                "outcome": "domain_error",
            },
        )
    else:
        logger.exception(
            "unhandled exception",
            extra={"event": "run.failed", "outcome": "unhandled"},
        )

    payload = error_payload(err)
    out = stream if stream is not None else sys.stderr
    out.write(json.dumps(payload, sort_keys=True) + "\n")
    return exit_code_for(err)
