from __future__ import annotations

import argparse

import numpy as np

from app.cli.options import emit, output_dir, read_norm_input, seeded_rng
from app.services.hermitian.pairs import HermitianPair, polygon
from app.services.norms.bands import polygon_band
from app.storage.bundles import write_csv


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "polygon", help="Harder-Narasimhan polygon, with a band for functional families"
    )
    parser.add_argument("input", help="JSON Gram pair or functional-family pair")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    source = read_norm_input(args.input)
    out = output_dir(args)
    if isinstance(source, HermitianPair):
        poly = polygon(source)
        path = write_csv(
            out / "polygon.csv",
            ("t", "value"),
            ((i, float(v)) for i, v in enumerate(poly.breakpoints)),
        )
        emit(
            {
                "command": "polygon",
                "rank": poly.rank,
                "degree": poly.degree,
                "concave": poly.is_concave(),
                "path": str(path),
            }
        )
        return 0

    phi, psi = source
    band = polygon_band(phi, psi, rng=seeded_rng(args))
    t = np.arange(band.polygon.rank + 1, dtype=np.float64)
    rows = zip(t, band.polygon.value(t), band.lower(t), band.upper(t), strict=True)
    path = write_csv(
        out / "polygon_band.csv",
        ("t", "value", "lower", "upper"),
        ((int(a), float(v), float(lo), float(hi)) for a, v, lo, hi in rows),
    )
    emit(
        {
            "command": "polygon",
            "rank": band.polygon.rank,
            "half_width_per_unit": band.budget.additive,
            "path": str(path),
        }
    )
    return 0
