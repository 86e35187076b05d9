import logging
from typing import Optional, TextIO

DEFAULT_FORMAT = '%(levelname)s:%(name)s:%(message)s'


def log_level(verbose: bool) -> int:
    return logging.DEBUG if verbose else logging.INFO


def configure_logging(level: int = logging.INFO, fmt: Optional[str] = None,
                      stream: Optional[TextIO] = None) -> None:
    """Install one root handler; repeated calls only change the level."""
    if fmt is None:
        fmt = DEFAULT_FORMAT
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler(stream)
        handler.setFormatter(logging.Formatter(fmt))
        root.addHandler(handler)
    root.setLevel(level)


__all__ = ["DEFAULT_FORMAT", "log_level", "configure_logging"]
