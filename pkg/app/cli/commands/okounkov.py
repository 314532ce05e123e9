from __future__ import annotations

import argparse

from app.cli.options import emit, input_error, output_dir
from app.core.config import settings
from app.services.okounkov.bodies import delta_body
from app.services.okounkov.limit import (
    brunn_minkowski_audit,
    default_t_grid,
    filtered_cdf,
)
from app.services.okounkov.semigroup import (
    conditions_check,
    superadditivity_audit,
    theta_estimate,
)
from app.storage.bundles import write_csv, write_json
from app.storage.tables import read_value_table


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "okounkov", help="filtered-body law F(t) = P(Z ≥ t) of a value table"
    )
    parser.add_argument("input", help="value table CSV: n, a1..ad, value")
    parser.add_argument("--points", type=int, default=None, help="size of the t grid")
    parser.add_argument(
        "--slack", type=float, default=1e-9, help="superadditivity slack of the table"
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    try:
        table = read_value_table(args.input, slack=args.slack)
    except ValueError as exc:
        raise input_error(exc, args.input) from exc
    d = table.sample.d
    grid = default_t_grid(table, args.points or settings.A_GRID_POINTS)
    law = filtered_cdf(table, grid)
    conditions = conditions_check(table.sample)
    audit = superadditivity_audit(table)
    brunn = brunn_minkowski_audit(law, d, tol=2.0 / max(table.sample.n_max, 1))
    body = delta_body(table.sample)

    out = output_dir(args)
    cdf_path = write_csv(
        out / "okounkov_cdf.csv",
        ("t", "tail", "cdf"),
        zip(law.t_grid.tolist(), law.tail.tolist(), law.cdf().tolist(), strict=True),
    )
    report = {
        "d": d,
        "n_max": table.sample.n_max,
        "conditions": conditions.to_dict(),
        "superadditivity": {
            "passed": audit.passed,
            "checked": audit.checked,
            "worst_gap": audit.worst_gap,
            "witness": audit.witness,
        },
        "theta": theta_estimate(table),
        "body": body.body.to_dict(),
        "brunn_minkowski": {"passed": brunn.passed, "worst_gap": brunn.worst_gap},
        "monotone": law.is_monotone,
    }
    report_path = write_json(out / "okounkov.json", report)
    emit(
        {
            "command": "okounkov",
            "conditions_passed": conditions.passed,
            "superadditive": audit.passed,
            "paths": [str(cdf_path), str(report_path)],
        }
    )
    return 0
