import logging
import sys
from typing import TextIO

LOG_FORMAT = "[%(asctime)s] %(levelname)s: %(message)s"


def setup_logger(level: int | str = logging.INFO, stream: TextIO | None = None) -> logging.Logger:
    """Configure the ``caving`` logger; module loggers (``caving.solver``, ...) inherit its handler."""
    logger = logging.getLogger("caving")
    logger.setLevel(level)
    if logger.handlers:
        return logger

    handler = logging.StreamHandler(stream=stream or sys.stdout)
    handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt="%H:%M:%S"))
    logger.addHandler(handler)
    logger.propagate = False
    return logger
