from __future__ import annotations

import logging
import sys
from collections.abc import Sequence

from app.cli.parser import build_parser
from app.core.error_reporting import report_error
from app.core.logging import configure_logging
from app.core.run_context import reset_run_context

logger = logging.getLogger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    """
    Entry point: `python -m app.main [global flags] COMMAND ...`.
    Exit codes: 0 ok, 2 invalid input or config, 3 numerical failure.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    reset_run_context()
    logger.debug("command started", extra={"event": "cli.command.started", "outcome": args.command})
    try:
        return args.handler(args)
    except Exception as exc:
        return report_error(exc)


if __name__ == "__main__":
    sys.exit(main())
