from __future__ import annotations

import numpy as np
import pytest

from ltfbgan.RunHistory import (
    HISTORY_FILE_NAME,
    SUMMARY_FILE_NAME,
    TIMINGS_FILE_NAME,
    RunHistory,
    read_history,
    read_summary,
    summarize,
    summary_as_text,
)


def final(combined: float, is_best: bool) -> dict:
    return {
        "steps": 20,
        "epochs": 2,
        "validation": {"forward_mae": combined / 2, "inverse_mae": combined / 2, "combined": combined},
        "counters": {"files_opened": 4, "samples_shuffled": 9},
        "is_best": is_best,
    }


def fill(history: RunHistory) -> None:
    history.record("run", mode="ltfb", k_trainers=2, config_hash="abc")
    history.record("step", trainer_id=1, step=1, generator=0.5)
    history.record("step", trainer_id=0, step=1, generator=0.7)
    history.flush()
    history.record("tournament", trainer_id=0, round=0, winner="incoming")
    history.record("tournament", trainer_id=1, round=0, winner="local")
    history.record("final", trainer_id=1, **final(0.4, True))
    history.record("final", trainer_id=0, **final(0.6, False))
    history.flush()


def test_trainer_records_are_committed_in_trainer_order():
    history = RunHistory()
    fill(history)
    assert [(r["kind"], r.get("trainer_id")) for r in history.records[:3]] == [
        ("run", None),
        ("step", 0),
        ("step", 1),
    ]


def test_trainer_records_wait_for_flush():
    history = RunHistory()
    history.record("step", trainer_id=0, step=1)
    assert history.records == []
    history.flush()
    assert len(history.records) == 1


def test_numpy_values_become_plain():
    history = RunHistory()
    entry = history.record("run", total=np.int64(3), loss=np.float32(0.5), ids=np.arange(2), pair=(1, 2))
    assert entry == {"kind": "run", "total": 3, "loss": 0.5, "ids": [0, 1], "pair": [1, 2]}
    assert type(entry["total"]) is int


def test_unknown_kind_is_rejected():
    with pytest.raises(ValueError, match="unknown history record kind"):
        RunHistory().record("checkpoint")


def test_filter_by_kind_and_trainer():
    history = RunHistory()
    fill(history)
    assert len(history.of_kind("final")) == 2
    assert [r["winner"] for r in history.of_kind("tournament", trainer_id=1)] == ["local"]


def test_summary_rows():
    history = RunHistory()
    fill(history)
    rows = summarize(history.records)
    assert [r["trainer_id"] for r in rows] == [0, 1]
    assert rows[0]["incoming_wins"] == 1
    assert rows[1]["incoming_wins"] == 0
    assert all(r["rounds"] == 1 for r in rows)
    assert rows[1]["is_best"] is True
    assert rows[0]["combined"] == 0.6
    assert rows[0]["config_hash"] == "abc"
    assert rows[0]["mode"] == "ltfb"


def test_summary_needs_a_run_record():
    with pytest.raises(ValueError, match="no run record"):
        summarize([{"kind": "final", "trainer_id": 0}])


def test_files_written_on_close(tmp_path):
    with RunHistory(tmp_path / "run") as history:
        fill(history)
        history.record_timing(1, 1, 10, 0.25, {"files_opened": 3, "samples_shuffled": 2})
        history.record_timing(0, 1, 10, 0.5, {"files_opened": 4, "samples_shuffled": 1})
        rows = history.write_summary()

    assert read_history(tmp_path / "run" / HISTORY_FILE_NAME) == history.records
    assert read_summary(tmp_path / "run" / SUMMARY_FILE_NAME) == summary_as_text(rows)
    timings = read_summary(tmp_path / "run" / TIMINGS_FILE_NAME)
    assert [t["trainer_id"] for t in timings] == ["0", "1"]


def test_no_timings_file_without_timings(tmp_path):
    with RunHistory(tmp_path) as history:
        fill(history)
    assert not (tmp_path / TIMINGS_FILE_NAME).exists()
    assert (tmp_path / HISTORY_FILE_NAME).is_file()
