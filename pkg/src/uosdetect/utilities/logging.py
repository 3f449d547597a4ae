import logging
from functools import lru_cache
from typing import Optional

PACKAGE_LOGGER = "uosdetect"


@lru_cache()
def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    A child of the `uosdetect` logger, or the package logger itself. Module
    names such as "uosdetect.sim.harness" are used as they are.
    """
    if not name or name == PACKAGE_LOGGER:
        return logging.getLogger(PACKAGE_LOGGER)
    if name.startswith(PACKAGE_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(PACKAGE_LOGGER).getChild(name)


def setup_logging(level: str) -> None:
    get_logger().setLevel(level)
