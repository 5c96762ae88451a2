"""
Whole-run orchestration: split the dataset, pre-train and broadcast the
autoencoder, build one trainer per partition, then interleave training with
tournament rounds (LTFB) or with nothing (K independent trainers).
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import structlog

from ltfbgan.config.TrainConfig import TrainConfig
from ltfbgan.ContractError import ContractError
from ltfbgan.datastore.BundleFile import BundleCatalog, read_bundle
from ltfbgan.datastore.DataStore import DataStore, StoreMode
from ltfbgan.datastore.EpochPlan import PERMUTATION_PRNG
from ltfbgan.nn.adam import AdamHyper
from ltfbgan.RunHistory import HISTORY_VERSION, RunHistory
from ltfbgan.surrogate.CycleGanModel import CycleGanModel, EvalMetric, SurrogateArch, pretrain_autoencoder
from ltfbgan.tournament.ltfb import (
    LtfbConfig,
    TournamentEvent,
    TransferLogEntry,
    hash_seed,
    pair_trainers,
    partition_dataset,
    tournament_round,
)
from ltfbgan.trainer.Trainer import Trainer, TrainerConfig

logger = structlog.getLogger(__name__)

# Upper bound on the samples the autoencoder is pre-trained on.
PRETRAIN_SAMPLE_LIMIT = 4096

# Stream tags for hash_seed, one per independent use of the run seed.
_AUTOENCODER, _INIT, _LR_JITTER, _PLAN, _PAIRING, _SPLIT, _PRETRAIN = range(7)


@dataclasses.dataclass(frozen=True)
class DatasetSplit:
    validation_ids: np.ndarray
    partitions: tuple[np.ndarray, ...]
    tournament_ids: tuple[np.ndarray, ...]

    @property
    def k(self) -> int:
        return len(self.partitions)

    def sizes(self) -> dict:
        return {
            "validation": int(len(self.validation_ids)),
            "train": [int(len(p)) for p in self.partitions],
            "tournament": [int(len(t)) for t in self.tournament_ids],
        }


@dataclasses.dataclass
class RunResult:
    mode: str
    trainers: list[Trainer]
    final_metrics: dict[int, EvalMetric]
    best_trainer: int
    events: list[TournamentEvent]
    transfer_log: list[TransferLogEntry]
    history: RunHistory

    @property
    def best_model(self) -> CycleGanModel:
        return next(t.model for t in self.trainers if t.trainer_id == self.best_trainer)

    @property
    def best_metric(self) -> EvalMetric:
        return self.final_metrics[self.best_trainer]


def split_dataset(
    n_samples: int,
    k: int,
    validation_fraction: float,
    tournament_fraction: float,
    seed: int,
) -> DatasetSplit:
    """
    Carve a shared validation slice, partition the rest among k trainers and
    hold out a tournament slice from every partition.
    """
    ids = np.arange(n_samples, dtype=np.int64)
    rng = np.random.Generator(np.random.PCG64(hash_seed(seed, _SPLIT)))
    shuffled = ids[rng.permutation(n_samples)]
    n_validation = int(round(n_samples * validation_fraction))
    if validation_fraction > 0:
        n_validation = max(1, n_validation)
    validation = np.sort(shuffled[:n_validation])

    partitions, tournaments = [], []
    for tid, part in enumerate(partition_dataset(shuffled[n_validation:], k, seed)):
        n_tournament = max(1, int(round(len(part) * tournament_fraction)))
        if n_tournament >= len(part):
            raise ContractError(
                "split_dataset", f"trainer {tid} partition of {len(part)} samples leaves nothing to train on"
            )
        order = np.random.Generator(np.random.PCG64(hash_seed(seed, _SPLIT, tid))).permutation(len(part))
        tournaments.append(np.sort(part[order[:n_tournament]]))
        partitions.append(np.sort(part[order[n_tournament:]]))

    if len(validation) == 0:
        validation = np.sort(np.concatenate(tournaments))
    return DatasetSplit(validation_ids=validation, partitions=tuple(partitions), tournament_ids=tuple(tournaments))


def load_slice(catalog: BundleCatalog, ids) -> tuple[np.ndarray, np.ndarray]:
    """Read the given samples straight from their bundles, each needed file once."""
    ids = [int(i) for i in ids]
    if not ids:
        raise ContractError("load_slice", "empty slice")
    by_file: dict[int, list[int]] = {}
    for sid in ids:
        bundle, _ = catalog.locate(sid)
        by_file.setdefault(bundle.file_id, []).append(sid)

    rows: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for file_id, wanted in sorted(by_file.items()):
        bundle = catalog.files[file_id]
        records = read_bundle(bundle, catalog.dims)
        for sid in wanted:
            record = records[sid - bundle.first_sample_id]
            rows[sid] = (record.input_params, record.output_vector())

    x = np.stack([rows[sid][0] for sid in ids]).astype(np.float32)
    y = np.stack([rows[sid][1] for sid in ids]).astype(np.float32)
    return x, y


def select_best(metrics: dict[int, EvalMetric]) -> int:
    """Trainer with the lowest combined metric; non-finite metrics rank last, ties go to the lower id."""
    if not metrics:
        raise ContractError("select_best", "no trainer metrics")

    def key(tid: int) -> tuple[float, int]:
        metric = metrics[tid]
        return (metric.combined if metric.is_finite() else np.inf, tid)

    return min(metrics, key=key)


def pretrained_autoencoder(config: TrainConfig, catalog: BundleCatalog, split: DatasetSplit) -> CycleGanModel:
    arch = SurrogateArch(dtype=config.dtype)
    model = CycleGanModel.create(
        catalog.dims, arch, seed=hash_seed(config.seed, _AUTOENCODER), hyper=AdamHyper(lr=config.lr)
    )
    if config.pretrain_steps > 0:
        pool = np.concatenate(split.partitions)
        rng = np.random.Generator(np.random.PCG64(hash_seed(config.seed, _PRETRAIN)))
        if len(pool) > PRETRAIN_SAMPLE_LIMIT:
            pool = np.sort(rng.choice(pool, size=PRETRAIN_SAMPLE_LIMIT, replace=False))
        _, outputs = load_slice(catalog, pool)
        pretrain_autoencoder(
            model,
            outputs,
            steps=config.pretrain_steps,
            batch_size=config.batch_size,
            seed=hash_seed(config.seed, _PRETRAIN, 1),
        )
    else:
        model.freeze_autoencoder()
    return model


def trainer_learning_rate(config: TrainConfig, trainer_id: int) -> float:
    if config.lr_jitter == 0:
        return config.lr
    rng = np.random.Generator(np.random.PCG64(hash_seed(config.seed, _LR_JITTER, trainer_id)))
    return float(config.lr * rng.uniform(1 - config.lr_jitter, 1 + config.lr_jitter))


def build_trainers(
    config: TrainConfig,
    catalog: BundleCatalog,
    split: DatasetSplit,
    autoencoder: CycleGanModel,
    history: RunHistory | None = None,
) -> list[Trainer]:
    arch = SurrogateArch(dtype=config.dtype)
    shard_threads = max(1, config.threads // split.k)
    trainers = []
    for tid in range(split.k):
        lr = trainer_learning_rate(config, tid)
        hyper = AdamHyper(lr=lr)
        model = CycleGanModel.create(
            catalog.dims, arch, seed=hash_seed(config.seed, _INIT, tid), hyper=hyper, loss_weights=config.loss_weights
        )
        model.install_autoencoder(autoencoder)

        store = DataStore(
            catalog,
            split.partitions[tid],
            n_shards=config.shards,
            mode=config.store_mode,
            memory_budget_bytes=config.memory_budget_bytes,
            trainer_id=tid,
            loader_threads=shard_threads,
        )
        if store.mode is StoreMode.PRELOAD:
            store.preload()

        trainer_config = TrainerConfig(
            trainer_id=tid,
            n_shards=config.shards,
            batch_size=config.batch_size,
            hyper=hyper,
            seed=hash_seed(config.seed, _PLAN, tid),
            max_skipped_steps=config.max_skipped_steps,
            prefetch_depth=config.prefetch_depth,
            shard_threads=shard_threads,
            verify_replicas=config.verify_replicas,
            record_steps=config.record_steps,
        )
        trainers.append(
            Trainer(
                trainer_config,
                model,
                store,
                tournament_data=load_slice(catalog, split.tournament_ids[tid]),
                history=history,
            )
        )
        logger.debug("Trainer built", trainer_id=tid, lr=lr, partition=len(split.partitions[tid]))
    return trainers


def barriers(steps: int, interval: int | None, eval_interval: int | None) -> list[int]:
    """Step counts at which all trainers synchronize: rounds, evaluations and the end of the budget."""
    points = {steps} if steps > 0 else set()
    for every in (interval, eval_interval):
        if every is not None:
            points.update(range(every, steps + 1, every))
    return sorted(points)


def _advance(trainers: list[Trainer], n_steps: int, executor: ThreadPoolExecutor | None) -> None:
    if n_steps == 0:
        return
    if executor is None:
        for trainer in trainers:
            trainer.train_steps(n_steps)
    else:
        for future in [executor.submit(trainer.train_steps, n_steps) for trainer in trainers]:
            future.result()


def _record_round(history: RunHistory, events: list[TournamentEvent], transfers: list[TransferLogEntry]) -> None:
    for transfer in transfers:
        history.record(
            "transfer",
            round=transfer.round_index,
            source=transfer.source_trainer,
            dest=transfer.dest_trainer,
            networks=list(transfer.networks),
            checksums=transfer.checksums,
            nbytes=transfer.nbytes,
        )
    for event in events:
        for outcome in event.outcomes:
            history.record(
                "tournament",
                trainer_id=outcome.trainer_id,
                round=event.round_index,
                step=event.step,
                partner=outcome.partner_id,
                local=outcome.local_metric.to_dict(),
                incoming=outcome.incoming_metric.to_dict(),
                winner=outcome.winner.value,
                local_checksums=outcome.local_checksums,
                incoming_checksums=outcome.incoming_checksums,
            )
    history.flush()


def run_training(
    config: TrainConfig,
    catalog: BundleCatalog,
    history: RunHistory | None = None,
    tournaments: bool | None = None,
) -> RunResult:
    """
    Run the configured orchestration. With tournaments off this is the
    K-independent baseline: the same trainers, partitions and seeds, with
    every round replaced by a no-op and best-of-K selection at the end.
    """
    history = history or RunHistory()
    tournaments = config.tournament_enabled if tournaments is None else tournaments
    k = config.k_trainers
    mode = "ltfb" if tournaments else ("single" if config.mode == "single" else "k-independent")
    log = logger.bind(mode=mode, k_trainers=k)

    split = split_dataset(catalog.total_samples, k, config.validation_fraction, config.tournament_fraction, config.seed)
    history.record(
        "run",
        version=HISTORY_VERSION,
        mode=mode,
        k_trainers=k,
        config_hash=config.config_hash(),
        dims=catalog.dims.to_dict(),
        total_samples=catalog.total_samples,
        split=split.sizes(),
        permutation_prng=PERMUTATION_PRNG,
    )

    autoencoder = pretrained_autoencoder(config, catalog, split)
    trainers = build_trainers(config, catalog, split, autoencoder, history)
    validation = load_slice(catalog, split.validation_ids)
    ltfb = LtfbConfig(
        k_trainers=k,
        tournament_interval=config.interval if tournaments else None,
        pairing_seed=hash_seed(config.seed, _PAIRING),
        partition_seed=config.seed,
        reset_discriminator=config.reset_discriminator,
    )

    events: list[TournamentEvent] = []
    transfer_log: list[TransferLogEntry] = []
    eval_points = set(barriers(config.steps, config.eval_interval, None))
    round_interval = ltfb.tournament_interval
    if config.eval_interval is None and round_interval is not None:
        eval_points.update(range(round_interval, config.steps + 1, round_interval))

    workers = min(config.threads, k)
    executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="trainer") if workers > 1 else None
    step = 0
    round_index = 0
    try:
        for point in barriers(config.steps, round_interval, config.eval_interval):
            _advance(trainers, point - step, executor)
            step = point
            history.flush()

            if round_interval is not None and point % round_interval == 0:
                matching = pair_trainers(k, round_index, ltfb.pairing_seed)
                round_transfers: list[TransferLogEntry] = []
                round_events = tournament_round(trainers, matching, ltfb, round_transfers)
                _record_round(history, round_events, round_transfers)
                events.extend(round_events)
                transfer_log.extend(round_transfers)
                round_index += 1

            if point in eval_points:
                for trainer in trainers:
                    metric = trainer.evaluate(*validation)
                    history.record("eval", trainer_id=trainer.trainer_id, step=point, **metric.to_dict())
                history.flush()
                log.info("Validation", step=point)

        final_metrics = {t.trainer_id: t.evaluate(*validation) for t in trainers}
        best = select_best(final_metrics)
        for trainer in trainers:
            history.record(
                "final",
                trainer_id=trainer.trainer_id,
                steps=trainer.step,
                epochs=trainer.epoch,
                skipped_steps=trainer.skipped_steps,
                lr=trainer.config.hyper.lr,
                validation=final_metrics[trainer.trainer_id].to_dict(),
                counters=trainer.counters_snapshot(),
                is_best=trainer.trainer_id == best,
                checksums=trainer.model.checksums(),
            )
        log.info(
            "Run finished",
            steps=step,
            rounds=round_index,
            best_trainer=best,
            best_combined=final_metrics[best].combined,
        )
    finally:
        history.flush()
        if executor is not None:
            executor.shutdown(wait=True)
        for trainer in trainers:
            trainer.close()

    return RunResult(
        mode=mode,
        trainers=trainers,
        final_metrics=final_metrics,
        best_trainer=best,
        events=events,
        transfer_log=transfer_log,
        history=history,
    )


def run_ltfb(config: TrainConfig, catalog: BundleCatalog, history: RunHistory | None = None) -> RunResult:
    return run_training(config, catalog, history, tournaments=config.interval is not None)


def run_k_independent(config: TrainConfig, catalog: BundleCatalog, history: RunHistory | None = None) -> RunResult:
    return run_training(config, catalog, history, tournaments=False)
