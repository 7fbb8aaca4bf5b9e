import logging
import sys
from typing import List, Optional

from com.mhire.app.config.config import Config
from com.mhire.app.services.cli.cli_router import run_args


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line entry: `python -m com.mhire.app.main factors "d^2 - x"`."""
    # Logs go to stderr; stdout carries only the report
    logging.basicConfig(
        level=Config().LOG_LEVEL.upper(),
        stream=sys.stderr,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    return run_args(argv)


if __name__ == "__main__":
    raise SystemExit(main())
