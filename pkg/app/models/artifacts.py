from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class ManifestFile(BaseModel):
    path: str
    sha256: str
    bytes: int = Field(..., ge=0)


class Manifest(BaseModel):
    run_id: str
    config_hash: str
    config: dict[str, Any]
    versions: dict[str, str]
    files: list[ManifestFile]
