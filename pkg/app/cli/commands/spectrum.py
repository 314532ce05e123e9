from __future__ import annotations

import argparse

from app.cli.options import emit, output_dir, read_norm_input, seeded_rng
from app.services.hermitian.pairs import HermitianPair, degree, hn_filtration, relative_spectrum
from app.services.norms.bands import degree_band
from app.storage.bundles import write_csv, write_json


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "spectrum", help="slopes of a Gram pair, or a degree band for two functional families"
    )
    parser.add_argument("input", help="JSON Gram pair or functional-family pair")
    parser.add_argument(
        "--monte-carlo",
        action="store_true",
        help="add a Monte Carlo volume estimate (real dimension ≤ 4)",
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    source = read_norm_input(args.input)
    out = output_dir(args)
    if isinstance(source, HermitianPair):
        profile = relative_spectrum(source)
        flag = hn_filtration(source)
        path = write_csv(
            out / "spectrum.csv",
            ("index", "slope"),
            ((i, float(s)) for i, s in enumerate(profile.slopes)),
        )
        emit(
            {
                "command": "spectrum",
                "rank": profile.dim,
                "degree": degree(source),
                "mean_slope": profile.mean,
                "hn_dims": list(flag.dims),
                "path": str(path),
            }
        )
        return 0

    phi, psi = source
    band = degree_band(phi, psi, rng=seeded_rng(args), monte_carlo=args.monte_carlo or None)
    payload = {
        "lower": band.lower,
        "upper": band.upper,
        "rigorous_lower": band.rigorous_lower,
        "rigorous_upper": band.rigorous_upper,
        "midpoint": band.midpoint,
        "budget": {"additive": band.budget.additive, "source": band.budget.source},
        "monte_carlo": (
            None
            if band.monte_carlo is None
            else {
                "value": band.monte_carlo.value,
                "std_error": band.monte_carlo.std_error,
                "samples": band.monte_carlo.samples,
            }
        ),
    }
    path = write_json(out / "degree_band.json", payload)
    emit({"command": "spectrum", "rank": phi.dim, **payload, "path": str(path)})
    return 0
