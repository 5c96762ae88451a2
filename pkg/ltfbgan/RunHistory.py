"""
Append-only record of one run: JSON lines for events, CSV for summaries.

Records produced by trainers are buffered per trainer and committed in trainer
order at every flush, so the event log does not depend on thread scheduling.
Wall-clock measurements are kept apart from the event log (timings.csv).
"""

from __future__ import annotations

import csv
import json
import threading
from collections import defaultdict
from pathlib import Path

import numpy as np
import structlog

logger = structlog.getLogger(__name__)

HISTORY_FILE_NAME = "history.jsonl"
SUMMARY_FILE_NAME = "summary.csv"
TIMINGS_FILE_NAME = "timings.csv"
HISTORY_VERSION = 1

RECORD_KINDS = ("run", "step", "epoch", "eval", "tournament", "transfer", "skip", "final")

SUMMARY_COLUMNS = (
    "trainer_id",
    "mode",
    "k_trainers",
    "steps",
    "epochs",
    "rounds",
    "incoming_wins",
    "forward_mae",
    "inverse_mae",
    "combined",
    "files_opened",
    "samples_shuffled",
    "is_best",
    "config_hash",
)

TIMING_COLUMNS = ("trainer_id", "epoch", "steps", "wall_time_s", "files_opened", "samples_shuffled")


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    return value


class RunHistory:
    def __init__(self, out_dir: Path | None = None):
        self.out_dir = out_dir
        self.records: list[dict] = []
        self.timings: list[dict] = []
        self._pending: dict[int, list[dict]] = defaultdict(list)
        self._lock = threading.Lock()
        self._file = None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            self._file = (out_dir / HISTORY_FILE_NAME).open("w", encoding="utf-8")

    def __enter__(self) -> RunHistory:
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def record(self, kind: str, trainer_id: int | None = None, **fields) -> dict:
        """Run-level records (trainer_id None) are committed at once; trainer records wait for flush()."""
        if kind not in RECORD_KINDS:
            raise ValueError(f"unknown history record kind {kind!r}")
        entry = {"kind": kind}
        if trainer_id is not None:
            entry["trainer_id"] = int(trainer_id)
        entry.update(_plain(fields))
        with self._lock:
            if trainer_id is None:
                self._commit([entry])
            else:
                self._pending[trainer_id].append(entry)
        return entry

    def record_timing(self, trainer_id: int, epoch: int, steps: int, wall_time_s: float, counters: dict) -> None:
        with self._lock:
            self.timings.append(
                {
                    "trainer_id": trainer_id,
                    "epoch": epoch,
                    "steps": steps,
                    "wall_time_s": wall_time_s,
                    "files_opened": counters["files_opened"],
                    "samples_shuffled": counters["samples_shuffled"],
                }
            )

    def flush(self) -> None:
        with self._lock:
            for trainer_id in sorted(self._pending):
                self._commit(self._pending[trainer_id])
            self._pending.clear()

    def _commit(self, entries: list[dict]) -> None:
        self.records.extend(entries)
        if self._file is not None:
            for entry in entries:
                self._file.write(json.dumps(entry, sort_keys=True) + "\n")
            self._file.flush()

    def close(self) -> None:
        self.flush()
        if self._file is not None:
            self._file.close()
            self._file = None
        if self.out_dir is not None and self.timings:
            write_csv(self.out_dir / TIMINGS_FILE_NAME, TIMING_COLUMNS, sorted_timings(self.timings))

    def of_kind(self, kind: str, trainer_id: int | None = None) -> list[dict]:
        return [
            r for r in self.records if r["kind"] == kind and (trainer_id is None or r.get("trainer_id") == trainer_id)
        ]

    def write_summary(self) -> list[dict]:
        rows = summarize(self.records)
        if self.out_dir is not None:
            write_csv(self.out_dir / SUMMARY_FILE_NAME, SUMMARY_COLUMNS, rows)
        return rows


def sorted_timings(timings: list[dict]) -> list[dict]:
    return sorted(timings, key=lambda t: (t["trainer_id"], t["epoch"]))


def summarize(records: list[dict]) -> list[dict]:
    """
    Derive one summary row per trainer from the `run`, `final` and
    `tournament` records alone.
    """
    run = next((r for r in records if r["kind"] == "run"), None)
    if run is None:
        raise ValueError("history has no run record")

    incoming_wins: dict[int, int] = defaultdict(int)
    rounds: dict[int, int] = defaultdict(int)
    for r in records:
        if r["kind"] == "tournament":
            rounds[r["trainer_id"]] += 1
            if r["winner"] == "incoming":
                incoming_wins[r["trainer_id"]] += 1

    finals = sorted((r for r in records if r["kind"] == "final"), key=lambda r: r["trainer_id"])
    rows = []
    for final in finals:
        tid = final["trainer_id"]
        rows.append(
            {
                "trainer_id": tid,
                "mode": run["mode"],
                "k_trainers": run["k_trainers"],
                "steps": final["steps"],
                "epochs": final["epochs"],
                "rounds": rounds[tid],
                "incoming_wins": incoming_wins[tid],
                "forward_mae": final["validation"]["forward_mae"],
                "inverse_mae": final["validation"]["inverse_mae"],
                "combined": final["validation"]["combined"],
                "files_opened": final["counters"]["files_opened"],
                "samples_shuffled": final["counters"]["samples_shuffled"],
                "is_best": final["is_best"],
                "config_hash": run["config_hash"],
            }
        )
    return rows


def write_csv(path: Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({column: row[column] for column in columns})


def read_history(path: Path) -> list[dict]:
    with path.open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def read_summary(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def summary_as_text(rows: list[dict]) -> list[dict]:
    """Render summary rows the way csv.DictWriter stores them, for comparison with read_summary()."""
    return [{column: str(row[column]) for column in SUMMARY_COLUMNS} for row in rows]
