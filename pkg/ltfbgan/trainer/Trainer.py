"""
A trainer: one model trained data-parallel over n_shards workers on its own
data partition.

Every shard keeps a replica of the model. Each minibatch is split across the
shards by the data store; the shards compute gradients on their slices, the
gradients are averaged (weighted by slice size, in shard order) and the same
averaged update is applied to every replica. Per minibatch the discriminator
is updated first, then the generator side (forward and inverse models).
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError, DimensionError
from ltfbgan.datastore.DataStore import DataStore, Minibatch, ShufflePrefetcher, StoreMode
from ltfbgan.datastore.EpochPlan import EpochPlan
from ltfbgan.nn.adam import AdamHyper, AdamState
from ltfbgan.nn.mlp import MlpParams
from ltfbgan.NumericError import NumericAbortError, NumericError
from ltfbgan.RunHistory import RunHistory
from ltfbgan.surrogate.CycleGanModel import (
    CycleGanModel,
    EvalMetric,
    GeneratorSnapshot,
    discriminator_gradients,
    evaluate,
    generator_gradients,
)

logger = structlog.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class TrainerConfig:
    trainer_id: int = 0
    n_shards: int = 4
    batch_size: int = 128
    hyper: AdamHyper = dataclasses.field(default_factory=AdamHyper)
    seed: int = 0
    max_skipped_steps: int = 10
    prefetch_depth: int = 1
    shard_threads: int = 1
    verify_replicas: bool = False
    record_steps: bool = True

    def __post_init__(self):
        if self.n_shards < 1:
            raise ContractError("TrainerConfig", f"n_shards must be >= 1, got {self.n_shards}")
        if self.batch_size < 1:
            raise ContractError("TrainerConfig", f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_skipped_steps < 0:
            raise ContractError("TrainerConfig", "max_skipped_steps must be >= 0")
        if self.prefetch_depth < 0:
            raise ContractError("TrainerConfig", "prefetch_depth must be >= 0")


@dataclasses.dataclass(frozen=True)
class StepRecord:
    step: int
    epoch: int
    discriminator: float | None
    generator: float | None
    forward: float | None
    adversarial: float | None
    cycle: float | None
    scalar: float | None = None
    image: float | None = None
    skipped: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class EpochRecord:
    epoch: int
    steps: int
    wall_time_s: float
    counters: dict
    epoch_counters: dict


def allreduce_gradients(
    shard_grads: list[dict[str, MlpParams]],
    shard_batch_sizes: list[int],
) -> dict[str, MlpParams]:
    """
    Weighted mean of per-shard gradients, weights = shard batch size / total.
    Shards are reduced in index order so the result is reproducible.
    """
    if not shard_grads:
        raise ContractError("allreduce_gradients", "no shard gradients")
    if len(shard_grads) != len(shard_batch_sizes):
        raise ContractError("allreduce_gradients", "one batch size is required per shard")
    total = sum(shard_batch_sizes)
    if total <= 0:
        raise ContractError("allreduce_gradients", "shard batch sizes sum to zero")

    names = tuple(shard_grads[0])
    reduced = {}
    for name in names:
        reference = shard_grads[0][name]
        accumulator = np.zeros(reference.size, dtype=np.float64)
        for shard, (grads, size) in enumerate(zip(shard_grads, shard_batch_sizes, strict=True)):
            if tuple(grads) != names:
                raise ContractError("allreduce_gradients", f"shard {shard} carries networks {tuple(grads)}")
            if grads[name].manifest != reference.manifest:
                raise DimensionError("allreduce_gradients", name, reference.size, grads[name].size)
            accumulator += (size / total) * grads[name].flatten().astype(np.float64)
        reduced[name] = MlpParams.unflatten(reference.manifest, accumulator.astype(reference.dtype))
    return reduced


class Trainer:
    def __init__(
        self,
        config: TrainerConfig,
        model: CycleGanModel,
        store: DataStore,
        tournament_data: tuple[np.ndarray, np.ndarray] | None = None,
        history: RunHistory | None = None,
    ):
        if store.n_shards != config.n_shards:
            raise ContractError(
                "Trainer", f"store has {store.n_shards} shards, trainer config asks for {config.n_shards}"
            )
        self.config = config
        self.trainer_id = config.trainer_id
        self.replicas = [model.copy() for _ in range(config.n_shards)]
        for replica in self.replicas:
            replica.set_learning_rate(config.hyper.lr)
        self.store = store
        self.tournament_data = tournament_data
        self.history = history
        self.step = 0
        self.epoch = 0
        self.step_in_epoch = 0
        self.skipped_steps = 0
        self.plan: EpochPlan | None = None
        self.step_records: list[StepRecord] = []
        self.epoch_records: list[EpochRecord] = []
        self._prefetcher: ShufflePrefetcher | None = None
        self._epoch_started: float | None = None
        self._shuffle_executor = (
            ThreadPoolExecutor(max_workers=1, thread_name_prefix=f"shuffle-{self.trainer_id}")
            if config.prefetch_depth > 0 and config.shard_threads > 1
            else None
        )
        self._shard_executor = (
            ThreadPoolExecutor(max_workers=config.shard_threads, thread_name_prefix=f"shard-{self.trainer_id}")
            if config.shard_threads > 1 and config.n_shards > 1
            else None
        )
        self.log = logger.bind(trainer_id=self.trainer_id)

    @property
    def model(self) -> CycleGanModel:
        return self.replicas[0]

    def close(self) -> None:
        for executor in (self._shuffle_executor, self._shard_executor):
            if executor is not None:
                executor.shutdown(wait=True)

    def _record(self, kind: str, **fields) -> None:
        if self.history is not None:
            self.history.record(kind, trainer_id=self.trainer_id, **fields)

    def _start_epoch(self) -> None:
        self.epoch += 1
        self.step_in_epoch = 0
        self.plan = self.store.plan_epoch(self.epoch, self.config.seed, self.config.batch_size)
        self._prefetcher = ShufflePrefetcher(
            self.store, self.plan, self.config.prefetch_depth, self._shuffle_executor
        )
        self._epoch_started = time.perf_counter()
        self.log.debug("Epoch started", epoch=self.epoch, steps=self.plan.n_steps)

    def _finish_epoch(self) -> None:
        wall_time = time.perf_counter() - self._epoch_started
        epoch_counters = self.store.counters.epoch(self.epoch)
        record = EpochRecord(
            epoch=self.epoch,
            steps=self.plan.n_steps,
            wall_time_s=wall_time,
            counters=self.store.counters.snapshot(),
            epoch_counters=dataclasses.asdict(epoch_counters),
        )
        self.epoch_records.append(record)
        self._record("epoch", epoch=record.epoch, step=self.step, counters=record.counters, delta=record.epoch_counters)
        if self.history is not None:
            self.history.record_timing(self.trainer_id, record.epoch, record.steps, wall_time, record.counters)
        self.log.info(
            "Epoch finished",
            epoch=record.epoch,
            wall_time_s=round(wall_time, 3),
            files_opened=epoch_counters.files_opened,
            samples_shuffled=epoch_counters.samples_shuffled,
        )

    def _per_shard(self, fn, minibatch: Minibatch) -> tuple[list, list[int]]:
        active = [s for s, size in enumerate(minibatch.shard_sizes) if size > 0]

        def run(shard: int):
            return fn(self.replicas[shard], minibatch.shard_inputs[shard], minibatch.shard_outputs[shard])

        if self._shard_executor is not None:
            results = list(self._shard_executor.map(run, active))
        else:
            results = [run(shard) for shard in active]
        return results, [minibatch.shard_sizes[s] for s in active]

    def _apply_everywhere(self, grads: dict[str, MlpParams]) -> None:
        for replica in self.replicas:
            replica.apply_gradients(grads)
        if self.config.verify_replicas:
            self.check_replicas()

    def check_replicas(self) -> None:
        reference = self.replicas[0].checksums()
        for shard, replica in enumerate(self.replicas[1:], start=1):
            if replica.checksums() != reference:
                raise ContractError("verify_replicas", f"shard {shard} replica diverged at step {self.step}")

    def _restore_discriminators(self, saved: list[tuple[MlpParams, AdamState]]) -> None:
        for replica, (params, state) in zip(self.replicas, saved, strict=True):
            replica.params["discriminator"].retire()
            replica.params["discriminator"] = params.copy()
            replica.optimizers["discriminator"] = state

    def _train_minibatch(self, minibatch: Minibatch) -> StepRecord:
        # A skipped step applies nothing, so the discriminator update is undone if the generator side fails.
        saved = [(r.params["discriminator"].copy(), r.optimizers["discriminator"]) for r in self.replicas]

        results, sizes = self._per_shard(discriminator_gradients, minibatch)
        total = sum(sizes)
        d_loss = sum(loss * size for (loss, _), size in zip(results, sizes, strict=True)) / total
        self._apply_everywhere(allreduce_gradients([grads for _, grads in results], sizes))

        try:
            results, sizes = self._per_shard(generator_gradients, minibatch)
            self._apply_everywhere(allreduce_gradients([grads for _, grads in results], sizes))
        except NumericError:
            self._restore_discriminators(saved)
            raise

        def weighted(field: str) -> float:
            return sum(getattr(losses, field) * size for (losses, _), size in zip(results, sizes, strict=True)) / total

        return StepRecord(
            step=self.step,
            epoch=self.epoch,
            discriminator=float(d_loss),
            generator=float(weighted("total")),
            forward=float(weighted("forward")),
            adversarial=float(weighted("adversarial")),
            cycle=float(weighted("cycle")),
            scalar=float(weighted("scalar")),
            image=float(weighted("image")),
        )

    def train_steps(self, n_steps: int) -> list[StepRecord]:
        """
        Run n_steps minibatch steps, starting new epochs as plans run out.
        A step whose loss or gradient is not finite is skipped (nothing from the
        failing sub-step is applied); more than max_skipped_steps skips abort.
        """
        if n_steps < 0:
            raise ContractError("train_steps", f"n_steps must be >= 0, got {n_steps}")
        if self.store.mode is StoreMode.PRELOAD and not self.store.is_fully_cached:
            raise ContractError("train_steps", "preload store has not been populated")

        records = []
        remaining = n_steps
        while remaining > 0:
            if self.plan is None or self.step_in_epoch == self.plan.n_steps:
                self._start_epoch()
            last_step = min(self.plan.n_steps - 1, self.step_in_epoch + remaining - 1)
            minibatch = self._prefetcher.get(self.step_in_epoch, last_step)
            self.step += 1
            try:
                record = self._train_minibatch(minibatch)
            except NumericError as e:
                self.skipped_steps += 1
                record = StepRecord(self.step, self.epoch, None, None, None, None, None, skipped=True)
                self.log.warning(
                    "Skipping step", **{**e.get_structured_error(), "step": self.step, "trainer_id": self.trainer_id}
                )
                self._record("skip", step=self.step, epoch=self.epoch, quantity=e.quantity, operation=e.operation)
                if self.skipped_steps > self.config.max_skipped_steps:
                    raise NumericAbortError(
                        self.trainer_id, self.step, self.skipped_steps, self.config.max_skipped_steps
                    ) from e
            records.append(record)
            if self.config.record_steps and not record.skipped:
                self._record("step", **record.to_dict())
            self.step_in_epoch += 1
            remaining -= 1
            if self.step_in_epoch == self.plan.n_steps:
                self._finish_epoch()

        self.step_records.extend(records)
        return records

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> EvalMetric:
        return evaluate(self.model, x, y)

    def evaluate_tournament(self) -> EvalMetric:
        if self.tournament_data is None:
            raise ContractError("evaluate_tournament", f"trainer {self.trainer_id} has no tournament slice")
        return self.evaluate(*self.tournament_data)

    def generator_snapshot(self) -> GeneratorSnapshot:
        return self.model.generator_snapshot(self.trainer_id)

    def install_generator(self, snapshot: GeneratorSnapshot, fresh_optimizer: bool = True) -> None:
        for replica in self.replicas:
            replica.install_generator(snapshot, fresh_optimizer=fresh_optimizer)

    def reset_discriminator(self, seed: int) -> None:
        for replica in self.replicas:
            replica.reset_discriminator(seed)

    def set_learning_rate(self, lr: float) -> None:
        for replica in self.replicas:
            replica.set_learning_rate(lr)

    def counters_snapshot(self) -> dict:
        return self.store.counters.snapshot()
