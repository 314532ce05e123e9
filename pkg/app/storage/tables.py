from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np

from app.services.okounkov.semigroup import ValueTable
from app.storage.bundles import read_csv, write_csv

# CSV layouts shared by the subcommands:
#   value tables  n, a1..ad, value
#   spectra       [norm,] n, index, slope   (the bundle's spectra.csv reads back)


def write_value_table(path: Path, table: ValueTable) -> Path:
    d = table.sample.d
    header = ["n", *(f"a{i + 1}" for i in range(d)), "value"]
    rows = [(n, *alpha, value) for n, alpha, value in table.entries()]
    return write_csv(path, header, rows)


def read_value_table(path: Path, *, slack: float = 1e-9) -> ValueTable:
    header, rows = read_csv(path)
    if len(header) < 3 or header[0] != "n" or header[-1] != "value":
        raise ValueError("VALUE_TABLE_HEADER")
    d = len(header) - 2
    entries = []
    for row in rows:
        if len(row) != d + 2:
            raise ValueError("VALUE_TABLE_ROW")
        try:
            entries.append((int(row[0]), tuple(int(x) for x in row[1:-1]), float(row[-1])))
        except ValueError as exc:
            raise ValueError("VALUE_TABLE_ENTRY") from exc
    if not any(n == 0 for n, _, _ in entries):
        entries.append((0, (0,) * d, 0.0))
    return ValueTable.from_entries(d, entries, slack=slack)


def read_spectra(path: Path, norm: str | None = None) -> dict[int, np.ndarray]:
    """Slopes per level, descending. A `norm` column, when present, is filtered on."""
    header, rows = read_csv(path)
    if header[-3:] != ["n", "index", "slope"]:
        raise ValueError("SPECTRA_HEADER")
    has_norm = header[0] == "norm"
    kinds = {row[0] for row in rows} if has_norm else set()
    if has_norm and norm is None and len(kinds) > 1:
        raise ValueError("SPECTRA_NORM_AMBIGUOUS")
    levels: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for row in rows:
        if has_norm and norm is not None and row[0] != norm:
            continue
        try:
            n, index, slope = int(row[-3]), int(row[-2]), float(row[-1])
        except ValueError as exc:
            raise ValueError("SPECTRA_ENTRY") from exc
        levels[n].append((index, slope))
    if not levels:
        raise ValueError("SPECTRA_EMPTY")
    return {
        n: np.sort(np.array([s for _, s in sorted(entries)]))[::-1]
        for n, entries in sorted(levels.items())
    }
