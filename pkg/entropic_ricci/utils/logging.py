"""
Console logging setup.

Library modules only call `logging.getLogger(__name__)`; the CLI calls
`configure()` once. Records are rendered as `[stage] message`, with the
stage being the last component of the logger name in upper case.
"""

import logging
import sys

_FORMAT = "[%(stage)s] %(message)s"


class _StageFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.stage = record.name.rsplit(".", 1)[-1].upper()
        return True


def configure(verbose: bool = False) -> None:
    """Attach a single stderr handler to the package logger."""
    root = logging.getLogger("entropic_ricci")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.addFilter(_StageFilter())
    handler.setFormatter(logging.Formatter(_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.propagate = False
