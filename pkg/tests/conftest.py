from __future__ import annotations

from collections.abc import Callable, Iterator
from pathlib import Path

import numpy as np
import pytest

from app.core.config import settings
from app.core.run_context import reset_run_context
from app.services.hermitian.forms import ScalarKind
from app.services.hermitian.pairs import HermitianPair, random_pair


@pytest.fixture(autouse=True)
def _set_test_env(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    monkeypatch.setattr(settings, "APP_ENV", "test", raising=False)
    monkeypatch.setattr(settings, "AUDIT_DIRECTIONS", 200, raising=False)
    monkeypatch.setattr(settings, "MC_SAMPLES", 20_000, raising=False)
    monkeypatch.setattr(settings, "ULTRA_PROBES", 100, raising=False)
    monkeypatch.setattr(settings, "THREADS", 1, raising=False)
    reset_run_context()
    yield
    reset_run_context()


@pytest.fixture()
def temp_output_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    out = tmp_path / "runs"
    out.mkdir(parents=True, exist_ok=True)
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(out), raising=False)
    return out


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture()
def make_pair(rng: np.random.Generator) -> Callable[..., HermitianPair]:
    def _make_pair(r: int, scalar_kind: ScalarKind = "real") -> HermitianPair:
        return random_pair(rng, r, scalar_kind)

    return _make_pair
