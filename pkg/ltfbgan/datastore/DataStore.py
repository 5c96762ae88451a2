"""
Owner-sharded in-memory sample cache of one trainer.

Each shard (a worker of the trainer) owns a disjoint part of the trainer's
partition. Minibatches are assembled by moving samples from owning shards to
consuming shards according to the epoch plan. Three population modes:

* none     every read opens the bundle file; nothing is cached
* dynamic  cache misses read from file and are cached on first use
* preload  every file of the partition is read once, by one shard, before training
"""

from __future__ import annotations

import collections
import dataclasses
from concurrent.futures import Future, ThreadPoolExecutor
from enum import Enum

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError
from ltfbgan.datastore.BundleFile import BundleCatalog, BundleFile, BundleReader
from ltfbgan.datastore.EpochPlan import EpochPlan, Transfer, build_plan, transfers_for
from ltfbgan.DataStoreError import CapacityError, StoreCorruptionError
from ltfbgan.synthdata.generator import SampleRecord

logger = structlog.getLogger(__name__)


class StoreMode(str, Enum):
    NONE = "none"
    DYNAMIC = "dynamic"
    PRELOAD = "preload"


@dataclasses.dataclass
class EpochCounters:
    files_opened: int = 0
    bytes_read: int = 0
    samples_shuffled: int = 0
    cache_hits: int = 0


@dataclasses.dataclass
class AccessCounters:
    files_opened: int = 0
    bytes_read: int = 0
    samples_shuffled: int = 0
    file_open_counts: collections.Counter = dataclasses.field(default_factory=collections.Counter)
    per_epoch: dict[int, EpochCounters] = dataclasses.field(default_factory=dict)

    def epoch(self, epoch: int) -> EpochCounters:
        return self.per_epoch.setdefault(epoch, EpochCounters())

    def record_open(self, epoch: int, file_id: int, nbytes: int) -> None:
        self.files_opened += 1
        self.bytes_read += nbytes
        self.file_open_counts[file_id] += 1
        counters = self.epoch(epoch)
        counters.files_opened += 1
        counters.bytes_read += nbytes

    def record_hit(self, epoch: int) -> None:
        self.epoch(epoch).cache_hits += 1

    def record_shuffle(self, epoch: int, n_samples: int) -> None:
        self.samples_shuffled += n_samples
        self.epoch(epoch).samples_shuffled += n_samples

    def snapshot(self) -> dict:
        return {
            "files_opened": self.files_opened,
            "bytes_read": self.bytes_read,
            "samples_shuffled": self.samples_shuffled,
        }


@dataclasses.dataclass
class OwnershipMap:
    sample_owner: dict[int, int] = dataclasses.field(default_factory=dict)
    file_loader: dict[int, int] = dataclasses.field(default_factory=dict)

    def owned_by(self, shard: int) -> set[int]:
        return {sid for sid, owner in self.sample_owner.items() if owner == shard}


@dataclasses.dataclass(frozen=True)
class Minibatch:
    epoch: int
    step: int
    shard_ids: tuple[np.ndarray, ...]
    shard_inputs: tuple[np.ndarray, ...]
    shard_outputs: tuple[np.ndarray, ...]
    transfers: tuple[Transfer, ...]

    @property
    def sample_ids(self) -> np.ndarray:
        return np.concatenate(self.shard_ids)

    @property
    def shard_sizes(self) -> tuple[int, ...]:
        return tuple(len(ids) for ids in self.shard_ids)

    @property
    def inputs(self) -> np.ndarray:
        return np.concatenate(self.shard_inputs)

    @property
    def outputs(self) -> np.ndarray:
        return np.concatenate(self.shard_outputs)


class DataStore:
    def __init__(
        self,
        catalog: BundleCatalog,
        partition,
        n_shards: int = 1,
        mode: StoreMode = StoreMode.DYNAMIC,
        memory_budget_bytes: int | None = None,
        trainer_id: int = 0,
        loader_threads: int = 1,
    ):
        if n_shards < 1:
            raise ContractError("DataStore", f"n_shards must be >= 1, got {n_shards}")
        self.catalog = catalog
        self.partition = np.array(sorted(int(s) for s in partition), dtype=np.int64)
        self._members = set(self.partition.tolist())
        if len(self._members) != len(self.partition):
            raise ContractError("DataStore", "partition contains duplicate sample ids")
        self.n_shards = n_shards
        self.mode = StoreMode(mode)
        self.memory_budget_bytes = memory_budget_bytes
        self.trainer_id = trainer_id
        self.loader_threads = max(1, loader_threads)
        self.caches: list[dict[int, SampleRecord]] = [{} for _ in range(n_shards)]
        self.ownership = OwnershipMap()
        self.counters = AccessCounters()
        self.current_epoch = 0
        self._next_owner = 0
        self.log = logger.bind(trainer_id=trainer_id, mode=self.mode.value)

    @property
    def record_nbytes(self) -> int:
        return self.catalog.record_nbytes

    @property
    def cached_bytes(self) -> int:
        return sum(len(cache) for cache in self.caches) * self.record_nbytes

    def cached_sample_ids(self) -> set[int]:
        return {sid for cache in self.caches for sid in cache}

    @property
    def is_fully_cached(self) -> bool:
        return len(self.ownership.sample_owner) == len(self.partition)

    def files_in_partition(self) -> list[BundleFile]:
        file_ids = sorted({self.catalog.locate(int(sid))[0].file_id for sid in self.partition})
        return [self.catalog.files[i] for i in file_ids]

    def _check_budget(self, required: int) -> None:
        if self.memory_budget_bytes is not None and required > self.memory_budget_bytes:
            raise CapacityError(required, self.memory_budget_bytes, self.trainer_id)

    def preload(self) -> AccessCounters:
        """
        Fully populate the store before training. Files are dealt round-robin
        to shards in file order; each file is opened by exactly one shard.
        """
        if self.mode is not StoreMode.PRELOAD:
            raise ContractError("preload", f"store is in {self.mode.value} mode")
        self._check_budget(len(self.partition) * self.record_nbytes)

        files = self.files_in_partition()
        assignments: dict[int, list[BundleFile]] = {shard: [] for shard in range(self.n_shards)}
        for i, bundle in enumerate(files):
            assignments[i % self.n_shards].append(bundle)

        def load_shard(shard: int) -> tuple[int, dict[int, SampleRecord], list[tuple[int, int]]]:
            records: dict[int, SampleRecord] = {}
            opens = []
            for bundle in assignments[shard]:
                wanted = [sid for sid in bundle.sample_ids if sid in self._members]
                with BundleReader(bundle, self.catalog.dims) as reader:
                    for sid in wanted:
                        records[sid] = reader.read_record(sid - bundle.first_sample_id)
                opens.append((bundle.file_id, reader.bytes_read))
            return shard, records, opens

        workers = min(self.loader_threads, self.n_shards)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(load_shard, range(self.n_shards)))
        else:
            results = [load_shard(shard) for shard in range(self.n_shards)]

        # Tallies are merged on this thread only.
        for shard, records, opens in results:
            self.caches[shard].update(records)
            for sid in records:
                self.ownership.sample_owner[sid] = shard
            for file_id, nbytes in opens:
                self.ownership.file_loader[file_id] = shard
                self.counters.record_open(self.current_epoch, file_id, nbytes)

        self.log.info(
            "Data store preloaded",
            files=len(files),
            samples=len(self.partition),
            shards=self.n_shards,
            bytes=self.cached_bytes,
        )
        return self.counters

    def _read_from_file(self, sample_id: int, epoch: int) -> SampleRecord:
        bundle, offset = self.catalog.locate(sample_id)
        with BundleReader(bundle, self.catalog.dims) as reader:
            record = reader.read_record(offset)
        self.counters.record_open(epoch, bundle.file_id, reader.bytes_read)
        return record

    def _check_member(self, sample_id: int) -> None:
        if sample_id not in self._members:
            raise ContractError("dynamic_fetch", f"sample {sample_id} is not in trainer {self.trainer_id}'s partition")

    def dynamic_fetch(self, sample_id: int) -> SampleRecord:
        self._check_member(sample_id)
        return self._fetch(sample_id, self.current_epoch)

    def _fetch(self, sample_id: int, epoch: int) -> SampleRecord:
        owner = self.ownership.sample_owner.get(sample_id)
        if owner is not None:
            record = self.caches[owner].get(sample_id)
            if record is None:
                raise StoreCorruptionError(sample_id, owner)
            self.counters.record_hit(epoch)
            return record

        self._check_budget(self.cached_bytes + self.record_nbytes)
        record = self._read_from_file(sample_id, epoch)
        owner = self._next_owner
        self._next_owner = (self._next_owner + 1) % self.n_shards
        self.caches[owner][sample_id] = record
        self.ownership.sample_owner[sample_id] = owner
        return record

    def _owner_map(self) -> dict[int, int] | None:
        if self.mode is StoreMode.NONE:
            return None
        return self.ownership.sample_owner if self.is_fully_cached else None

    def plan_epoch(self, epoch: int, seed: int, batch_size: int) -> EpochPlan:
        plan = build_plan(self.partition, epoch, seed, batch_size, self.n_shards, self._owner_map())
        if self.mode is StoreMode.NONE:
            plan = dataclasses.replace(
                plan,
                steps=tuple(dataclasses.replace(step, transfers=()) for step in plan.steps),
            )
        return plan

    def shuffle_step(self, plan: EpochPlan, step: int) -> Minibatch:
        """
        Deliver minibatch `step` of the plan: every consumer shard receives its
        slice, pulled from the owning shard's cache (or the file system).
        """
        if not 0 <= step < plan.n_steps:
            raise ContractError("shuffle_step", f"step {step} outside plan of {plan.n_steps} steps")
        planned = plan.steps[step]
        epoch = plan.epoch
        self.current_epoch = epoch

        shard_records: list[list[SampleRecord]] = []
        for ids in planned.consumer_ids:
            records = []
            for sid in ids:
                if self.mode is StoreMode.NONE:
                    records.append(self._read_from_file(sid, epoch))
                elif self.mode is StoreMode.DYNAMIC:
                    records.append(self._fetch(sid, epoch))
                else:
                    owner = self.ownership.sample_owner.get(sid)
                    record = self.caches[owner].get(sid) if owner is not None else None
                    if record is None:
                        raise StoreCorruptionError(sid, -1 if owner is None else owner, step)
                    self.counters.record_hit(epoch)
                    records.append(record)
            shard_records.append(records)

        if self.mode is StoreMode.NONE:
            transfers: tuple[Transfer, ...] = ()
        else:
            transfers = transfers_for(planned.consumer_ids, self.ownership.sample_owner)
            if planned.transfers is not None and planned.transfers != transfers:
                raise ContractError("shuffle_step", f"transfers at step {step} differ from the epoch plan")
        self.counters.record_shuffle(epoch, sum(len(t.sample_ids) for t in transfers))

        dims = self.catalog.dims
        shard_inputs, shard_outputs = [], []
        for records in shard_records:
            if records:
                shard_inputs.append(np.stack([r.input_params for r in records]))
                shard_outputs.append(np.stack([r.output_vector() for r in records]))
            else:
                shard_inputs.append(np.empty((0, dims.input_dim), dtype=np.float32))
                shard_outputs.append(np.empty((0, dims.output_dim), dtype=np.float32))

        return Minibatch(
            epoch=epoch,
            step=step,
            shard_ids=tuple(np.array(ids, dtype=np.int64) for ids in planned.consumer_ids),
            shard_inputs=tuple(shard_inputs),
            shard_outputs=tuple(shard_outputs),
            transfers=transfers,
        )


class ShufflePrefetcher:
    """
    Issues shuffle steps of one epoch plan ahead of consumption on a
    single-worker executor, so store mutations happen in plan order.
    """

    def __init__(self, store: DataStore, plan: EpochPlan, depth: int, executor: ThreadPoolExecutor | None):
        self.store = store
        self.plan = plan
        self.depth = depth if executor is not None else 0
        self.executor = executor
        self._pending: dict[int, Future] = {}
        self._next_submit = 0

    def get(self, step: int, last_step: int) -> Minibatch:
        """Return minibatch `step`, prefetching up to `depth` further steps but never past last_step."""
        if self.depth == 0:
            return self.store.shuffle_step(self.plan, step)
        if step not in self._pending:
            self._next_submit = max(self._next_submit, step)
        limit = min(step + self.depth, last_step, self.plan.n_steps - 1)
        while self._next_submit <= limit:
            self._pending[self._next_submit] = self.executor.submit(
                self.store.shuffle_step, self.plan, self._next_submit
            )
            self._next_submit += 1
        return self._pending.pop(step).result()
