# utils/__init__.py

from .log import logger, setup_logging

__all__ = ["logger", "setup_logging"]
