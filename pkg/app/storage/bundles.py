from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

from app.core.config import output_root
from app.core.error_reporting import to_jsonable
from app.core.hashing import canonical_json, hash_file, hash_text
from app.core.identifiers import parse_run_id
from app.models.artifacts import Manifest, ManifestFile

# Bundle writers. Output is byte-stable: no timestamps, sorted JSON keys,
# fixed float formatting and "\n" line endings, so a rerun reproduces every hash.

VERSIONED_PACKAGES = ("numpy", "scipy", "sympy", "pydantic")
FLOAT_FORMAT = "{:.12g}"


def ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def bundle_dir(run_id: str, out_dir: str | None = None) -> Path:
    return (Path(out_dir) if out_dir else output_root()) / parse_run_id(run_id)


def format_value(value: Any) -> str:
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return FLOAT_FORMAT.format(value)
    return str(value)


def _round_floats(value: Any) -> Any:
    if isinstance(value, float) and math.isfinite(value):
        return float(FLOAT_FORMAT.format(value))
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round_floats(v) for v in value]
    return value


def _atomic_write(path: Path, text: str) -> None:
    ensure_dir(path.parent)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    tmp.replace(path)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(x) for x in row])
    _atomic_write(path, buffer.getvalue())
    return path


def write_json(path: Path, payload: Any) -> Path:
    clean = _round_floats(to_jsonable(payload))
    _atomic_write(path, json.dumps(clean, sort_keys=True, indent=2) + "\n")
    return path


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError("EMPTY_CSV")
    return rows[0], rows[1:]


def package_versions() -> dict[str, str]:
    out = {}
    for name in VERSIONED_PACKAGES:
        try:
            out[name] = version(name)
        except PackageNotFoundError:
            out[name] = "missing"
    return out


def config_hash(config: dict[str, Any]) -> str:
    return hash_text(canonical_json(config), prefix_len=64)


def write_manifest(
    directory: Path, *, run_id: str, config: dict[str, Any], files: Sequence[Path]
) -> Path:
    entries = [
        ManifestFile(path=p.name, sha256=hash_file(p), bytes=p.stat().st_size)
        for p in sorted(files, key=lambda p: p.name)
    ]
    manifest = Manifest(
        run_id=run_id,
        config_hash=config_hash(config),
        config=config,
        versions=package_versions(),
        files=entries,
    )
    return write_json(directory / "manifest.json", manifest.model_dump(mode="json"))
