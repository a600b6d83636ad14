"""JSONL run logging for pebkit.

Every CLI invocation gets one file, ``<command>-<id>.jsonl``, holding:

    run_start       command, argv, seed
    search_result   one per Kraus-rank search (target k, outcome, restart, iterations)
    bracket         the final lower/upper Schmidt-number bounds
    branch          one per protocol outcome (α, m, n, probability)
    run_end         exit code and the JSON report

Events carry a sequence number and a UTC timestamp.

Env vars:
    PEBKIT_LOG_DISABLE: Set to "1" or "true" to disable logging (default: enabled)
    PEBKIT_LOG_DIR: Directory for log files (default: ./logs)
"""

import itertools
import json
import logging
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from uuid import uuid4

from pebkit.schmidt import RankCertificate

logger = logging.getLogger(__name__)


def _is_disabled() -> bool:
    return os.environ.get("PEBKIT_LOG_DISABLE", "").lower() in ("1", "true")


class RunLog:
    def __init__(self, command: str, log_dir: Path, **context):
        log_dir.mkdir(parents=True, exist_ok=True)
        self.path = log_dir / f"{command}-{uuid4().hex[:12]}.jsonl"
        self._file = self.path.open("a")
        self._lock = threading.Lock()
        self._seq = itertools.count()
        self._closed = False
        self._write("run_start", command=command, **context)

    def _write(self, event: str, **fields):
        record = {"event": event, **fields}
        with self._lock:
            if self._closed:
                return
            record["seq"] = next(self._seq)
            record["ts"] = datetime.now(timezone.utc).isoformat()
            try:
                self._file.write(json.dumps(record, default=str) + "\n")
                self._file.flush()
            except (OSError, TypeError, ValueError) as e:
                logger.warning(f"run log {self.path}: dropped {event} event ({e})")

    def search_result(self, certificate: RankCertificate):
        self._write(
            "search_result",
            target_k=certificate.target_k,
            achieved=certificate.achieved,
            max_rank_found=certificate.max_rank_found,
            residual=certificate.residual,
            restart=certificate.restart,
            iterations=certificate.iterations,
        )

    def bracket(self, lower: int, upper: int, canonical_max_rank: int):
        self._write("bracket", lower=lower, upper=upper, canonical_max_rank=canonical_max_rank)

    def branch(self, alpha: int, m: int, n: int, probability: float):
        self._write("branch", alpha=alpha, m=m, n=n, probability=probability)

    def end(self, exit_code: int, report: dict | None = None):
        """Write run_end and close the file; later events are ignored."""
        self._write("run_end", exit_code=exit_code, report=report)
        with self._lock:
            self._closed = True
            self._file.close()


def create_log(command: str, **context) -> RunLog | None:
    """Open the log for one invocation; None when disabled or the directory is unusable."""
    if _is_disabled():
        return None
    log_dir = Path(os.environ.get("PEBKIT_LOG_DIR", "./logs"))
    try:
        return RunLog(command, log_dir, **context)
    except OSError as e:
        logger.warning(f"run logging disabled: cannot open a log in {log_dir} ({e.strerror})")
        return None
