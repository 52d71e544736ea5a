"""
Run tracking service.
Records stage status and wall-clock time for calibrations and forecasts.
Tracking is observational only: nothing here feeds back into results.
"""

import logging
import time
import uuid
from typing import Any, Dict, Iterable, Optional

logger = logging.getLogger(__name__)

STATUSES = ("waiting", "running", "done", "error")


class RunTracker:
    """Tracks runs made of named stages (calibration phases, scenarios)."""

    def __init__(self):
        self.runs: Dict[str, Dict[str, Any]] = {}

    def create_run(self, kind: str, stages: Iterable[str]) -> str:
        """Create a new run with every stage waiting."""
        run_id = str(uuid.uuid4())
        self.runs[run_id] = {
            "kind": kind,
            "status": "pending",
            "stages": {name: {"status": "waiting", "message": None, "seconds": None} for name in stages},
            "started": time.perf_counter(),
        }
        logger.debug(f"Run {run_id} ({kind}) created with stages {list(self.runs[run_id]['stages'])}")
        return run_id

    def get_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        return self.runs.get(run_id)

    def update_stage(self, run_id: str, stage: str, status: str, message: Optional[str] = None) -> None:
        """Move a stage to ``status``; finishing a stage records its duration."""
        if status not in STATUSES:
            raise ValueError(f"unknown stage status {status!r}")
        run = self.get_run(run_id)
        if run is None:
            logger.warning(f"Unknown run {run_id} - stage update for {stage} dropped")
            return

        entry = run["stages"].setdefault(stage, {"status": "waiting", "message": None, "seconds": None})
        now = time.perf_counter()
        if status == "running":
            entry["_t0"] = now
            run["status"] = "running"
        elif "_t0" in entry:
            entry["seconds"] = now - entry.pop("_t0")
        entry["status"] = status
        if message:
            entry["message"] = message

        took = f" in {entry['seconds']:.1f}s" if entry["seconds"] is not None and status != "running" else ""
        log = logger.error if status == "error" else logger.info
        log(f"[{run['kind']}] {stage}: {status}{took}{f' - {message}' if message else ''}")

    def finish(self, run_id: str, status: str = "completed") -> None:
        """Close a run and log its total and per-stage wall-clock time."""
        run = self.get_run(run_id)
        if run is None:
            return
        run["status"] = status
        elapsed = time.perf_counter() - run["started"]
        timed = [f"{name} {seconds:.1f}s" for name, seconds in self.durations(run_id).items() if seconds is not None]
        breakdown = " (" + ", ".join(timed) + ")" if timed else ""
        logger.info(f"[{run['kind']}] {status} after {elapsed:.1f}s{breakdown}")

    def durations(self, run_id: str) -> Dict[str, Optional[float]]:
        run = self.get_run(run_id) or {"stages": {}}
        return {name: stage["seconds"] for name, stage in run["stages"].items()}


# Global tracker instance
run_tracker = RunTracker()
