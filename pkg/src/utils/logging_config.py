"""
Application logging configuration with run context.

This module sets up logging to stderr and stamps every record with the id
of the active run, so log lines of concurrent runs can be told apart.
"""
import logging
import sys

NO_RUN = "-"

_run_id = NO_RUN


def set_run_id(run_id: str) -> None:
    """Set the run id stamped on subsequent log records."""
    global _run_id
    _run_id = run_id or NO_RUN


class RunContextFilter(logging.Filter):
    """Filter that adds the active run id to log records."""

    def filter(self, record: logging.LogRecord) -> bool:
        """Attach run_id; never blocks a record."""
        record.run_id = _run_id
        return True


def setup_logging(level: str = "INFO") -> None:
    """
    Configure application logging.

    Logs go to stderr; stdout carries machine-readable results only.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
    """
    handler = logging.StreamHandler(sys.stderr)
    # handler-level: logger filters skip propagated records
    handler.addFilter(RunContextFilter())

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(asctime)s | %(name)s | %(levelname)s | %(run_id)s | %(message)s',
        handlers=[handler],
        force=True
    )
