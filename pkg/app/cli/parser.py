from __future__ import annotations

import argparse

from app.cli.commands import converge, okounkov, polygon, run, spectrum, ultra
from app.core.config import settings

COMMANDS = (spectrum, polygon, okounkov, ultra, converge, run)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Slopes, Okounkov limit laws and convergence experiments for pairs of norms.",
    )
    parser.add_argument("--config", default=None, help="experiment config (JSON)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--n-max", dest="n_max", type=int, default=None)
    parser.add_argument("--order", choices=("grlex", "grevlex", "lex"), default=None)
    parser.add_argument("--norm", choices=("sup", "l2", "both"), default=None)
    parser.add_argument(
        "--log-level",
        dest="log_level",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        default=None,
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser
