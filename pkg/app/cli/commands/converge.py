from __future__ import annotations

import argparse

from app.cli.options import emit, input_error, output_dir
from app.core.errors import ConfigError
from app.services.hermitian.pairs import SpectralMeasure
from app.services.limit_laws.report import convergence_report
from app.storage.bundles import write_csv, write_json
from app.storage.tables import read_spectra


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "converge", help="Cauchy diagnostics and the extrapolated limit law of saved spectra"
    )
    parser.add_argument("input", help="spectra CSV: [norm,] n, index, slope")
    parser.add_argument(
        "--budget",
        action="store_true",
        help="allow A(r_n)/n per level, for spectra computed from surrogate norms",
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    norm = args.norm if args.norm in ("sup", "l2") else None
    try:
        spectra = read_spectra(args.input, norm)
    except ValueError as exc:
        raise input_error(exc, args.input) from exc
    if args.n_max is not None:
        kept = {n: s for n, s in spectra.items() if n <= args.n_max}
        if not kept:
            raise ConfigError(
                "No spectra level is within --n-max.",
                details={"n_max": args.n_max, "levels": sorted(spectra)},
            )
        spectra = kept
    laws = {n: SpectralMeasure.uniform(s / n) for n, s in spectra.items()}
    ranks = {n: int(s.size) for n, s in spectra.items()} if args.budget else None
    report = convergence_report(laws, ranks=ranks)

    out = output_dir(args)
    top = laws[max(laws)]
    cdf_path = write_csv(
        out / "converge_cdf.csv",
        ("t", "limit", "empirical"),
        (
            (float(t), float(v), float(top.cdf(t)))
            for t, v in zip(report.limit.t, report.limit.values, strict=True)
        ),
    )
    report_path = write_json(out / "converge.json", report.to_dict())
    emit(
        {
            "command": "converge",
            "converged": report.converged,
            "energy_limit": report.energy_limit,
            "paths": [str(cdf_path), str(report_path)],
        }
    )
    return 0
