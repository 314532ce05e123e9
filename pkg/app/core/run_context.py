from __future__ import annotations

import contextvars
from collections.abc import Iterator
from contextlib import contextmanager

# Run-scoped context
# 'global' variables for each experiment run
# Each run sets contexvars:
#   1) run_id = config hash prefix
#   2) stage = name of the pipeline stage being executed

_run_id_var: contextvars.ContextVar[str] = contextvars.ContextVar(
    "run_id",
    default="-",
)
_stage_var: contextvars.ContextVar[str] = contextvars.ContextVar(
    "stage",
    default="-",
)


def reset_run_context() -> None:
    _run_id_var.set("-")
    _stage_var.set("-")


def get_run_id() -> str:
    return _run_id_var.get()


def set_run_id(value: str) -> None:
    _run_id_var.set(value)


def get_stage() -> str:
    return _stage_var.get()


def set_stage(value: str) -> None:
    _stage_var.set(value)


@contextmanager
def stage_scope(name: str) -> Iterator[None]:
    token = _stage_var.set(name)
    try:
        yield
    finally:
        _stage_var.reset(token)
