import logging
import os
import sys
from typing import Optional

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import config

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None, verbose: bool = False) -> None:
    """Route progress logging to stderr; stdout is kept for machine output."""
    name = "DEBUG" if verbose else (level or config.LOG_LEVEL)
    logging.basicConfig(
        level=getattr(logging, str(name).upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
