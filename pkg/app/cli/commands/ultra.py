from __future__ import annotations

import argparse
from fractions import Fraction

from app.cli.options import emit, output_dir, read_model
from app.models.ultra import UltraPairModel
from app.services.ultrametric.fields import parse_rational
from app.services.ultrametric.slopes import degree_ultra, slopes_ultra, truncate_ultra
from app.storage.bundles import write_json


def _q(value: Fraction) -> list[int]:
    return [value.numerator, value.denominator]


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "ultra", help="exact slopes and truncations of an ultrametric norm pair"
    )
    parser.add_argument("input", help="JSON with field, phi and psi norm trees")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    model = read_model(args.input, UltraPairModel)
    pair = model.to_pair()
    deg = degree_ultra(pair)
    slopes = slopes_ultra(pair)
    truncations = []
    for a in model.truncations:
        result = truncate_ultra(pair, parse_rational(a))
        truncations.append(
            {
                "a": _q(result.threshold),
                "degree": _q(result.degree.exponent),
                "legendre": _q(result.legendre.exponent),
                "equal": result.equal,
            }
        )
    field = pair.field
    report = {
        "dim": pair.dim,
        "base_log": deg.base_log,
        "degree": {"exponent": _q(deg.exponent), "value": deg.value},
        "slopes": [_q(e) for e in slopes.exponents],
        "polygon": [_q(s) for s in slopes.partial_sums()],
        "basis": [[field.encode(x) for x in v] for v in slopes.basis],
        "truncations": truncations,
        "error_bound": slopes.error_bound,
    }
    path = write_json(output_dir(args) / "ultra.json", report)
    emit(
        {
            "command": "ultra",
            "dim": pair.dim,
            "degree": _q(deg.exponent),
            "truncations_exact": all(t["equal"] for t in truncations),
            "path": str(path),
        }
    )
    return 0
