from __future__ import annotations

import numpy as np
import pytest

from ltfbgan.config.TrainConfig import TrainConfig
from ltfbgan.ContractError import ContractError
from ltfbgan.RunHistory import SUMMARY_FILE_NAME, RunHistory, read_summary, summary_as_text
from ltfbgan.surrogate.CycleGanModel import EvalMetric
from ltfbgan.tournament.ltfb import audit_transfers
from ltfbgan.tournament.orchestration import (
    barriers,
    load_slice,
    run_k_independent,
    run_ltfb,
    run_training,
    select_best,
    split_dataset,
    trainer_learning_rate,
)


def run_config(tmp_path, **overrides) -> TrainConfig:
    settings = {
        "data_dir": tmp_path / "data",
        "out_dir": tmp_path / "out",
        "mode": "ltfb",
        "trainers": 2,
        "shards": 2,
        "batch_size": 16,
        "steps": 30,
        "interval": 10,
        "pretrain_steps": 0,
        "validation_fraction": 0.1,
        "tournament_fraction": 0.1,
        **overrides,
    }
    return TrainConfig(**settings)


@pytest.fixture
def catalog(make_catalog):
    return make_catalog(240, 40)


def test_split_is_disjoint_and_complete():
    split = split_dataset(1000, 4, validation_fraction=0.05, tournament_fraction=0.1, seed=0)
    pieces = [split.validation_ids, *split.partitions, *split.tournament_ids]
    everything = np.concatenate(pieces)
    assert len(everything) == len(set(everything.tolist())) == 1000
    assert split.k == 4
    assert split.sizes()["validation"] == 50
    assert sorted(len(p) + len(t) for p, t in zip(split.partitions, split.tournament_ids, strict=True)) == [
        237,
        237,
        238,
        238,
    ]
    assert split.sizes()["tournament"] == [24, 24, 24, 24]


def test_split_without_validation_reuses_the_tournament_slices():
    split = split_dataset(100, 2, validation_fraction=0.0, tournament_fraction=0.1, seed=0)
    np.testing.assert_array_equal(split.validation_ids, np.sort(np.concatenate(split.tournament_ids)))


def test_split_keeps_at_least_one_validation_sample():
    assert len(split_dataset(10, 2, validation_fraction=0.01, tournament_fraction=0.2, seed=0).validation_ids) == 1


def test_split_needs_training_samples_left():
    with pytest.raises(ContractError, match="nothing to train on"):
        split_dataset(4, 2, validation_fraction=0.0, tournament_fraction=0.9, seed=0)


def test_split_is_reproducible():
    a = split_dataset(300, 3, 0.1, 0.1, seed=9)
    b = split_dataset(300, 3, 0.1, 0.1, seed=9)
    np.testing.assert_array_equal(a.validation_ids, b.validation_ids)
    for x, y in zip(a.partitions, b.partitions, strict=True):
        np.testing.assert_array_equal(x, y)


def test_load_slice_returns_rows_in_request_order(catalog):
    x, y = load_slice(catalog, [130, 5, 77])
    reference_x, reference_y = load_slice(catalog, [5])
    np.testing.assert_array_equal(x[1], reference_x[0])
    np.testing.assert_array_equal(y[1], reference_y[0])
    assert x.shape == (3, catalog.dims.input_dim)
    assert y.dtype == np.float32
    with pytest.raises(ContractError):
        load_slice(catalog, [])


@pytest.mark.parametrize(
    "combined, expected",
    [
        pytest.param({0: 0.5, 1: 0.3, 2: 0.4}, 1, id="lowest"),
        pytest.param({0: 0.3, 1: 0.3}, 0, id="tie goes to lower id"),
        pytest.param({0: float("nan"), 1: 0.9}, 1, id="non-finite ranks last"),
        pytest.param({3: float("inf"), 5: float("nan")}, 3, id="all non-finite"),
    ],
)
def test_select_best(combined, expected):
    metrics = {tid: EvalMetric(value, value, value) for tid, value in combined.items()}
    assert select_best(metrics) == expected


def test_select_best_needs_metrics():
    with pytest.raises(ContractError):
        select_best({})


@pytest.mark.parametrize(
    "steps, interval, eval_interval, expected",
    [
        pytest.param(30, 10, None, [10, 20, 30], id="rounds"),
        pytest.param(25, 10, 7, [7, 10, 14, 20, 21, 25], id="rounds and evaluations"),
        pytest.param(5, 10, None, [5], id="interval beyond budget"),
        pytest.param(12, None, None, [12], id="no rounds"),
        pytest.param(0, 10, None, [], id="no steps"),
    ],
)
def test_barriers(steps, interval, eval_interval, expected):
    assert barriers(steps, interval, eval_interval) == expected


def test_learning_rate_jitter_stays_in_range(tmp_path):
    config = run_config(tmp_path, lr=0.01, lr_jitter=0.2, trainers=8)
    rates = [trainer_learning_rate(config, tid) for tid in range(8)]
    assert all(0.008 <= lr <= 0.012 for lr in rates)
    assert len(set(rates)) == 8
    assert trainer_learning_rate(run_config(tmp_path, lr=0.01), 3) == 0.01


def test_single_trainer_plays_no_rounds(tmp_path, catalog):
    result = run_training(run_config(tmp_path, mode="single", trainers=None), catalog)
    assert result.mode == "single"
    assert len(result.trainers) == 1
    assert result.events == []
    assert result.history.of_kind("tournament") == []
    assert result.best_trainer == 0
    assert result.trainers[0].step == 30


def test_rounds_happen_at_every_interval(tmp_path, catalog):
    result = run_ltfb(run_config(tmp_path), catalog)

    assert result.mode == "ltfb"
    assert [(e.round_index, e.step) for e in result.events] == [(0, 10), (1, 20), (2, 30)]
    assert len(result.transfer_log) == 6
    audit_transfers(result.transfer_log)
    assert len(result.history.of_kind("tournament")) == 6
    assert [r["step"] for r in result.history.of_kind("eval", trainer_id=0)] == [10, 20, 30]
    assert all(t.step == 30 for t in result.trainers)
    assert result.history.of_kind("run")[0]["permutation_prng"] == "PCG64"


def test_odd_trainer_count_gives_a_bye_each_round(tmp_path, catalog):
    result = run_ltfb(run_config(tmp_path, trainers=3, steps=20), catalog)
    assert len(result.events) == 2
    assert len(result.history.of_kind("tournament")) == 4


def test_interval_beyond_budget_means_no_rounds(tmp_path, catalog):
    result = run_ltfb(run_config(tmp_path, steps=12, interval=50), catalog)
    independent = run_k_independent(run_config(tmp_path, steps=12, interval=50), catalog)
    assert result.events == []
    assert all(t.step == 12 for t in result.trainers)
    for a, b in zip(result.trainers, independent.trainers, strict=True):
        assert a.step_records == b.step_records
    assert result.final_metrics == independent.final_metrics


def test_disabled_rounds_match_independent_training(tmp_path, catalog):
    no_rounds = run_ltfb(run_config(tmp_path, interval=None), catalog)
    independent = run_k_independent(run_config(tmp_path, mode="k-independent"), catalog)

    assert no_rounds.mode == independent.mode == "k-independent"
    for a, b in zip(no_rounds.trainers, independent.trainers, strict=True):
        assert a.step_records == b.step_records
        assert a.model.checksums() == b.model.checksums()
    assert no_rounds.final_metrics == independent.final_metrics
    assert no_rounds.best_trainer == independent.best_trainer


def test_independent_baseline_ignores_the_interval(tmp_path, catalog):
    result = run_k_independent(run_config(tmp_path, interval=5), catalog)
    assert result.events == []
    assert result.transfer_log == []


def test_runs_are_reproducible_across_thread_counts(tmp_path, catalog):
    serial = run_ltfb(run_config(tmp_path, threads=1), catalog)
    threaded = run_ltfb(run_config(tmp_path, threads=4), catalog)
    assert serial.history.records == threaded.history.records


def test_best_trainer_is_marked_in_the_final_records(tmp_path, catalog):
    result = run_ltfb(run_config(tmp_path, trainers=3, steps=20), catalog)
    finals = result.history.of_kind("final")
    assert [r["trainer_id"] for r in finals] == [0, 1, 2]
    assert [r["trainer_id"] for r in finals if r["is_best"]] == [result.best_trainer]
    best_final = finals[result.best_trainer]
    assert best_final["checksums"] == result.best_model.checksums()
    assert best_final["validation"]["combined"] == result.best_metric.combined
    assert result.best_metric.combined == min(m.combined for m in result.final_metrics.values())


def test_pretrained_autoencoder_is_shared(tmp_path, catalog):
    result = run_ltfb(run_config(tmp_path, pretrain_steps=5, steps=10), catalog)
    encoders = {t.model.checksum("encoder") for t in result.trainers}
    decoders = {t.model.checksum("decoder") for t in result.trainers}
    assert len(encoders) == len(decoders) == 1
    assert all(t.model.autoencoder_frozen for t in result.trainers)


def test_summary_agrees_with_history(tmp_path, catalog):
    out_dir = tmp_path / "run"
    with RunHistory(out_dir) as history:
        result = run_ltfb(run_config(tmp_path, trainers=4, steps=20), catalog, history)
        rows = history.write_summary()

    assert summary_as_text(rows) == read_summary(out_dir / SUMMARY_FILE_NAME)
    assert [row["trainer_id"] for row in rows] == [0, 1, 2, 3]
    assert all(row["rounds"] == 2 for row in rows)
    wins = {o.trainer_id: 0 for e in result.events for o in e.outcomes}
    for event in result.events:
        for outcome in event.outcomes:
            wins[outcome.trainer_id] += outcome.winner.value == "incoming"
    assert {row["trainer_id"]: row["incoming_wins"] for row in rows} == wins
    assert sum(row["is_best"] for row in rows) == 1
    assert {row["config_hash"] for row in rows} == {result.history.of_kind("run")[0]["config_hash"]}
