from __future__ import annotations

import argparse

from app.cli.options import emit, load_config
from app.services.pipeline import run


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("run", help="full experiment bundle from a config")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    result = run(load_config(args))
    emit(
        {
            "command": "run",
            "run_id": result.run_id,
            "directory": str(result.directory),
            "files": [p.name for p in result.files],
        }
    )
    return 0
