from __future__ import annotations

import re
from typing import Any

from app.core.hashing import canonical_json, hash_text

RUN_ID_LENGTH = 16

_RUN_ID_RE = re.compile(r"^[0-9a-f]{16}$")

# Run identifiers are derived from the config, never random:
# the same config always maps to the same run id and bundle directory.


def run_id_for_config(config: dict[str, Any]) -> str:
    """
    Return the deterministic run id of a config dict.
    """
    return hash_text(canonical_json(config), prefix_len=RUN_ID_LENGTH)


def parse_run_id(value: str) -> str:
    if not isinstance(value, str):
        raise ValueError("INVALID_RUN_ID")

    normalized = value.strip().lower()
    if not _RUN_ID_RE.match(normalized):
        raise ValueError("INVALID_RUN_ID")
    return normalized
