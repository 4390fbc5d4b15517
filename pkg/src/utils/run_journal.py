"""
Run journal for long computations.

This module keeps an append-only, line-oriented record of run events next to
the output files. It records events and counts only, never array data.
"""
import logging
import os


class RunJournal:
    """
    Append-only journal of run events (run_journal.log in the output directory).

    One line per event: timestamp | level | EVENT | key=value | ...
    """

    FILE_NAME = "run_journal.log"

    def __init__(self, directory: str, run_id: str):
        """
        Initialize run journal.

        Args:
            directory: Output directory holding the journal
            run_id: Short id of the run (prefix of the configuration hash)
        """
        self.log_file = os.path.join(directory or ".", self.FILE_NAME)
        self.run_id = run_id
        self._setup_logger()

    def _setup_logger(self) -> None:
        """Configure journal logger."""
        self.logger = logging.getLogger(f"run_journal.{self.run_id}")
        self.logger.setLevel(logging.INFO)
        self.logger.propagate = False

        # File handler (append mode)
        self.handler = logging.FileHandler(self.log_file, mode='a')
        self.handler.setFormatter(
            logging.Formatter(
                '%(asctime)s | %(levelname)s | %(message)s',
                datefmt='%Y-%m-%dT%H:%M:%S'
            )
        )
        self.logger.addHandler(self.handler)

    def log_start(self, subcommand: str, config_hash: str) -> None:
        """
        Log run start.

        Args:
            subcommand: CLI subcommand
            config_hash: Full configuration hash
        """
        self.logger.info(
            f"START | run={self.run_id} | command={subcommand} | hash={config_hash}"
        )

    def log_resumed(self, reused: int) -> None:
        """Log a sweep resumed from partial output."""
        self.logger.info(f"RESUMED | run={self.run_id} | reused_points={reused}")

    def log_point_failed(self, row: int, col: int, message: str) -> None:
        """Log a failed sweep point."""
        self.logger.warning(
            f"POINT_FAILED | run={self.run_id} | row={row} | col={col} | error={message[:200]}"
        )

    def log_complete(self, subcommand: str, output: str, failed: int = 0) -> None:
        """Log run completion."""
        self.logger.info(
            f"COMPLETE | run={self.run_id} | command={subcommand} | output={output} | failed={failed}"
        )

    def log_error(self, subcommand: str, error_message: str) -> None:
        """
        Log a fatal run error.

        Args:
            subcommand: CLI subcommand
            error_message: Error description (truncated)
        """
        self.logger.error(
            f"ERROR | run={self.run_id} | command={subcommand} | error={error_message[:200]}"
        )

    def close(self) -> None:
        """Detach and close the file handler."""
        self.logger.removeHandler(self.handler)
        self.handler.close()
