from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from ltfbgan.ContractError import ContractError
from ltfbgan.DataStoreError import CapacityError, StoreCorruptionError
from ltfbgan.datastore.DataStore import DataStore, ShufflePrefetcher, StoreMode


def run_epoch(store: DataStore, epoch: int, seed: int = 0, batch_size: int = 16):
    plan = store.plan_epoch(epoch, seed, batch_size)
    return plan, [store.shuffle_step(plan, step) for step in range(plan.n_steps)]


def test_preload_opens_every_file_once(make_catalog):
    catalog = make_catalog(200, 25)
    store = DataStore(catalog, range(200), n_shards=4, mode=StoreMode.PRELOAD)

    counters = store.preload()

    assert counters.files_opened == 8
    assert set(counters.file_open_counts.values()) == {1}
    assert sorted(store.ownership.file_loader) == list(range(8))
    assert store.cached_sample_ids() == set(range(200))
    owned = [store.ownership.owned_by(shard) for shard in range(4)]
    assert sum(len(s) for s in owned) == 200
    assert set().union(*owned) == set(range(200))


def test_single_shard_preload_owns_everything(make_catalog):
    catalog = make_catalog(30, 10)
    store = DataStore(catalog, range(30), n_shards=1, mode=StoreMode.PRELOAD)
    store.preload()
    assert store.counters.files_opened == 3
    assert store.ownership.owned_by(0) == set(range(30))


def test_threaded_preload_matches_serial(make_catalog):
    catalog = make_catalog(120, 10)
    serial = DataStore(catalog, range(120), n_shards=4, mode=StoreMode.PRELOAD)
    threaded = DataStore(catalog, range(120), n_shards=4, mode=StoreMode.PRELOAD, loader_threads=4)
    serial.preload()
    threaded.preload()
    assert serial.ownership == threaded.ownership
    assert serial.counters.files_opened == threaded.counters.files_opened == 12


def test_preload_only_reads_files_of_the_partition(make_catalog):
    catalog = make_catalog(100, 10)
    store = DataStore(catalog, [3, 4, 55, 97], n_shards=2, mode=StoreMode.PRELOAD)
    store.preload()
    assert store.counters.files_opened == 3
    assert store.cached_sample_ids() == {3, 4, 55, 97}


def test_zero_budget_preload_fails_and_leaves_store_empty(make_catalog):
    catalog = make_catalog(40, 10)
    store = DataStore(catalog, range(40), n_shards=2, mode=StoreMode.PRELOAD, memory_budget_bytes=0)

    with pytest.raises(CapacityError) as e:
        store.preload()

    assert e.value.required_bytes == 40 * catalog.record_nbytes
    assert e.value.available_bytes == 0
    assert store.cached_sample_ids() == set()
    assert store.counters.files_opened == 0


def test_preload_requires_preload_mode(make_catalog):
    store = DataStore(make_catalog(10, 10), range(10), mode=StoreMode.DYNAMIC)
    with pytest.raises(ContractError):
        store.preload()


def test_second_fetch_is_a_cache_hit(make_catalog):
    store = DataStore(make_catalog(20, 10), range(20), n_shards=2)
    first = store.dynamic_fetch(5)
    opened = store.counters.files_opened
    second = store.dynamic_fetch(5)
    assert store.counters.files_opened == opened == 1
    assert first.equals(second)
    assert store.counters.epoch(0).cache_hits == 1


def test_fetch_outside_partition_is_rejected(make_catalog):
    store = DataStore(make_catalog(20, 10), range(10))
    with pytest.raises(ContractError):
        store.dynamic_fetch(15)


def test_dynamic_fetch_of_everything_matches_preload_contents(make_catalog):
    catalog = make_catalog(60, 20)
    dynamic = DataStore(catalog, range(60), n_shards=3)
    for sid in range(60):
        dynamic.dynamic_fetch(sid)
    preloaded = DataStore(catalog, range(60), n_shards=3, mode=StoreMode.PRELOAD)
    preloaded.preload()
    assert dynamic.cached_sample_ids() == preloaded.cached_sample_ids()
    assert dynamic.is_fully_cached


def test_dynamic_budget_is_enforced_on_first_touch(make_catalog):
    catalog = make_catalog(20, 10)
    store = DataStore(catalog, range(20), memory_budget_bytes=3 * catalog.record_nbytes)
    for sid in range(3):
        store.dynamic_fetch(sid)
    with pytest.raises(CapacityError):
        store.dynamic_fetch(3)


def test_dynamic_store_stops_reading_files_after_the_first_epoch(make_catalog):
    store = DataStore(make_catalog(120, 30), range(120), n_shards=4)
    for epoch in (1, 2, 3):
        run_epoch(store, epoch)
    assert store.counters.epoch(1).files_opened == 120
    assert store.counters.epoch(2).files_opened == 0
    assert store.counters.epoch(3).files_opened == 0
    assert store.counters.epoch(3).cache_hits == 120


def test_preloaded_store_reads_no_files_while_training(make_catalog):
    store = DataStore(make_catalog(120, 30), range(120), n_shards=4, mode=StoreMode.PRELOAD)
    store.preload()
    for epoch in (1, 2):
        run_epoch(store, epoch)
    assert store.counters.files_opened == 4
    assert store.counters.epoch(1).files_opened == store.counters.epoch(2).files_opened == 0


def test_naive_ingestion_reads_files_every_epoch(make_catalog):
    store = DataStore(make_catalog(60, 20), range(60), n_shards=2, mode=StoreMode.NONE)
    opened = []
    for epoch in (1, 2, 3):
        run_epoch(store, epoch)
        opened.append(store.counters.files_opened)
    assert opened == [60, 120, 180]
    assert store.cached_sample_ids() == set()


def test_minibatches_deliver_the_partition_exactly_once(make_catalog):
    store = DataStore(make_catalog(100, 25), range(0, 100, 2), n_shards=3)
    for epoch in (1, 2):
        plan, minibatches = run_epoch(store, epoch, batch_size=7)
        delivered = np.concatenate([mb.sample_ids for mb in minibatches]).tolist()
        assert Counter(delivered) == Counter(range(0, 100, 2))
        assert tuple(delivered) == plan.permutation


def test_stores_deliver_identical_minibatches_from_the_second_epoch(make_catalog):
    catalog = make_catalog(96, 16)
    stores = {mode: DataStore(catalog, range(96), n_shards=4, mode=mode) for mode in StoreMode}
    stores[StoreMode.PRELOAD].preload()
    for store in stores.values():
        run_epoch(store, 1, seed=5)

    streams = {mode: run_epoch(store, 2, seed=5)[1] for mode, store in stores.items()}

    reference = streams[StoreMode.DYNAMIC]
    for mode in (StoreMode.PRELOAD, StoreMode.NONE):
        for a, b in zip(reference, streams[mode], strict=True):
            np.testing.assert_array_equal(a.sample_ids, b.sample_ids)
            np.testing.assert_array_equal(a.inputs, b.inputs)
            np.testing.assert_array_equal(a.outputs, b.outputs)
    assert stores[StoreMode.DYNAMIC].cached_sample_ids() == stores[StoreMode.PRELOAD].cached_sample_ids()


def test_shuffled_samples_count_transfers_between_shards(make_catalog):
    store = DataStore(make_catalog(64, 16), range(64), n_shards=2, mode=StoreMode.PRELOAD)
    store.preload()
    plan, minibatches = run_epoch(store, 1)
    owners = store.ownership.sample_owner
    expected = sum(
        owners[int(sid)] != consumer for mb in minibatches for consumer, ids in enumerate(mb.shard_ids) for sid in ids
    )
    assert store.counters.epoch(1).samples_shuffled == expected
    assert all(mb.transfers == step.transfers for mb, step in zip(minibatches, plan.steps, strict=True))


def test_single_shard_never_transfers(make_catalog):
    store = DataStore(make_catalog(32, 8), range(32), n_shards=1, mode=StoreMode.PRELOAD)
    store.preload()
    _, minibatches = run_epoch(store, 1)
    assert all(mb.transfers == () for mb in minibatches)
    assert store.counters.samples_shuffled == 0


def test_missing_cached_sample_is_reported_as_corruption(make_catalog):
    store = DataStore(make_catalog(20, 10), range(20), n_shards=2, mode=StoreMode.PRELOAD)
    store.preload()
    plan = store.plan_epoch(1, 0, 20)
    victim = plan.steps[0].consumer_ids[0][0]
    del store.caches[store.ownership.sample_owner[victim]][victim]
    with pytest.raises(StoreCorruptionError) as e:
        store.shuffle_step(plan, 0)
    assert e.value.sample_id == victim


def test_empty_consumer_shards_get_empty_arrays(make_catalog):
    catalog = make_catalog(10, 10)
    store = DataStore(catalog, [1, 2], n_shards=4)
    plan = store.plan_epoch(1, 0, 2)
    minibatch = store.shuffle_step(plan, 0)
    assert minibatch.shard_sizes == (1, 1, 0, 0)
    assert minibatch.shard_inputs[3].shape == (0, catalog.dims.input_dim)
    assert minibatch.shard_outputs[3].shape == (0, catalog.dims.output_dim)


def test_step_outside_plan_is_rejected(make_catalog):
    store = DataStore(make_catalog(10, 10), range(10))
    plan = store.plan_epoch(1, 0, 5)
    with pytest.raises(ContractError):
        store.shuffle_step(plan, 2)


def test_duplicate_partition_ids_are_rejected(make_catalog):
    with pytest.raises(ContractError):
        DataStore(make_catalog(10, 10), [1, 1, 2])


def test_prefetched_stream_matches_synchronous_stream(make_catalog):
    catalog = make_catalog(80, 20)
    synchronous = DataStore(catalog, range(80), n_shards=2)
    prefetched = DataStore(catalog, range(80), n_shards=2)
    _, expected = run_epoch(synchronous, 1)

    plan = prefetched.plan_epoch(1, 0, 16)
    with ThreadPoolExecutor(max_workers=1) as executor:
        prefetcher = ShufflePrefetcher(prefetched, plan, depth=2, executor=executor)
        got = [prefetcher.get(step, plan.n_steps - 1) for step in range(plan.n_steps)]

    for a, b in zip(expected, got, strict=True):
        np.testing.assert_array_equal(a.outputs, b.outputs)
    assert prefetched.ownership == synchronous.ownership
    assert prefetched.counters.files_opened == synchronous.counters.files_opened
