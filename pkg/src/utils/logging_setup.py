"""
Logger configuration for the command-line front end.
Library modules only call logging.getLogger(__name__); this is the one place
handlers are attached.
"""
import logging
import os
import sys
from typing import Optional

from dotenv import load_dotenv

_FORMAT = "%(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    """
    Attach a stderr handler to the root logger.

    The level comes from the argument, else MINKVAL_LOG_LEVEL (a .env file is
    honoured), else WARNING. Reports go to stdout/files, so stderr logging never
    disturbs byte-identical output.
    """
    load_dotenv()
    name = (level or os.getenv("MINKVAL_LOG_LEVEL") or "WARNING").upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        numeric = logging.WARNING

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))
    root.addHandler(handler)
    root.setLevel(numeric)
