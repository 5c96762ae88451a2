"""
Time the initial and steady-state epochs of one trainer under each data store
mode over the same data and plan seed, and report the file accesses behind them.
"""

from __future__ import annotations

import math
import statistics
import time

import numpy as np
import structlog

from ltfbgan.config.BenchDatastoreConfig import BenchDatastoreConfig
from ltfbgan.datastore.BundleFile import BundleCatalog
from ltfbgan.datastore.DataStore import DataStore, StoreMode
from ltfbgan.nn.adam import AdamHyper
from ltfbgan.RunHistory import write_csv
from ltfbgan.surrogate.CycleGanModel import CycleGanModel, SurrogateArch
from ltfbgan.trainer.Trainer import Trainer, TrainerConfig

logger = structlog.getLogger(__name__)

BENCH_FILE_NAME = "bench_datastore.csv"
BENCH_COLUMNS = (
    "mode",
    "epoch",
    "wall_time_s",
    "files_opened",
    "bytes_read",
    "samples_shuffled",
    "cache_hits",
    "max_opens_per_file",
)


def _epochs_with_model(config: BenchDatastoreConfig, store: DataStore, catalog: BundleCatalog) -> list[float]:
    hyper = AdamHyper(lr=config.lr)
    model = CycleGanModel.create(catalog.dims, SurrogateArch(), seed=config.seed, hyper=hyper)
    model.freeze_autoencoder()
    trainer = Trainer(
        TrainerConfig(
            n_shards=config.shards,
            batch_size=config.batch_size,
            hyper=hyper,
            seed=config.seed,
            prefetch_depth=config.prefetch_depth,
            shard_threads=config.threads,
            record_steps=False,
        ),
        model,
        store,
    )
    steps_per_epoch = math.ceil(len(store.partition) / config.batch_size)
    try:
        trainer.train_steps(steps_per_epoch * config.epochs)
    finally:
        trainer.close()
    return [record.wall_time_s for record in trainer.epoch_records]


def _epochs_data_only(config: BenchDatastoreConfig, store: DataStore) -> list[float]:
    times = []
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        plan = store.plan_epoch(epoch, config.seed, config.batch_size)
        for step in range(plan.n_steps):
            store.shuffle_step(plan, step)
        times.append(time.perf_counter() - started)
    return times


def bench_mode(config: BenchDatastoreConfig, catalog: BundleCatalog, mode: StoreMode) -> list[dict]:
    store = DataStore(
        catalog,
        np.arange(catalog.total_samples),
        n_shards=config.shards,
        mode=mode,
        memory_budget_bytes=config.memory_budget_bytes,
        loader_threads=config.threads,
    )
    preload_time = None
    if mode is StoreMode.PRELOAD:
        started = time.perf_counter()
        store.preload()
        preload_time = time.perf_counter() - started

    if config.train_model:
        times = _epochs_with_model(config, store, catalog)
    else:
        times = _epochs_data_only(config, store)

    max_opens = max(store.counters.file_open_counts.values(), default=0)
    rows = []
    if preload_time is not None:
        rows.append(_row(mode, 0, preload_time, store, max_opens))
    for epoch, wall_time in enumerate(times, start=1):
        rows.append(_row(mode, epoch, wall_time, store, max_opens))

    steady = times[1:] or times
    logger.info(
        "Mode finished",
        mode=mode.value,
        first_epoch_s=round(times[0], 4),
        steady_state_s=round(statistics.mean(steady), 4),
        preload_s=None if preload_time is None else round(preload_time, 4),
        files_opened=store.counters.files_opened,
        max_opens_per_file=max_opens,
    )
    return rows


def _row(mode: StoreMode, epoch: int, wall_time: float, store: DataStore, max_opens: int) -> dict:
    counters = store.counters.epoch(epoch)
    return {
        "mode": mode.value,
        "epoch": epoch,
        "wall_time_s": wall_time,
        "files_opened": counters.files_opened,
        "bytes_read": counters.bytes_read,
        "samples_shuffled": counters.samples_shuffled,
        "cache_hits": counters.cache_hits,
        "max_opens_per_file": max_opens,
    }


def bench_datastore(config: BenchDatastoreConfig) -> list[dict]:
    catalog = BundleCatalog.load(config.data_dir)
    config.save(config.out_dir)
    rows = []
    for mode in config.modes:
        rows.extend(bench_mode(config, catalog, StoreMode(mode)))
    write_csv(config.out_dir / BENCH_FILE_NAME, BENCH_COLUMNS, rows)
    logger.info("Benchmark written", path=str(config.out_dir / BENCH_FILE_NAME))
    return rows
