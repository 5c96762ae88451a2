"""
Tournament rounds between trainers.

Trainers are randomly paired; the two members of a pair swap generator-side
networks (forward and inverse models). Each trainer scores its own generator
and the incoming one on its local tournament slice and keeps the better one.
Discriminators never leave their trainer.
"""

from __future__ import annotations

import dataclasses
from enum import Enum

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError
from ltfbgan.surrogate.CycleGanModel import GENERATOR_NETWORKS, EvalMetric, GeneratorSnapshot
from ltfbgan.trainer.Trainer import Trainer

logger = structlog.getLogger(__name__)


class Winner(str, Enum):
    LOCAL = "local"
    INCOMING = "incoming"


@dataclasses.dataclass(frozen=True)
class LtfbConfig:
    k_trainers: int = 2
    # None disables tournament rounds.
    tournament_interval: int | None = 10
    pairing_seed: int = 0
    partition_seed: int = 0
    fresh_optimizer: bool = True
    reset_discriminator: bool = False

    def __post_init__(self):
        if self.k_trainers < 1:
            raise ContractError("LtfbConfig", f"k_trainers must be >= 1, got {self.k_trainers}")
        if self.tournament_interval is not None and self.tournament_interval < 1:
            raise ContractError("LtfbConfig", f"tournament_interval must be >= 1, got {self.tournament_interval}")


@dataclasses.dataclass(frozen=True)
class Matching:
    round_index: int
    pairs: tuple[tuple[int, int], ...]
    bye: int | None = None

    def __post_init__(self):
        seen = [t for pair in self.pairs for t in pair] + ([self.bye] if self.bye is not None else [])
        if len(seen) != len(set(seen)):
            raise ContractError("Matching", f"a trainer appears more than once in {self.pairs}")

    @property
    def partner(self) -> dict[int, int]:
        out = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out


@dataclasses.dataclass(frozen=True)
class TrainerOutcome:
    trainer_id: int
    partner_id: int
    local_metric: EvalMetric
    incoming_metric: EvalMetric
    winner: Winner
    local_checksums: dict[str, str]
    incoming_checksums: dict[str, str]

    @property
    def retained_metric(self) -> EvalMetric:
        return self.incoming_metric if self.winner is Winner.INCOMING else self.local_metric


@dataclasses.dataclass(frozen=True)
class TournamentEvent:
    round_index: int
    step: int
    pair: tuple[int, int]
    outcomes: tuple[TrainerOutcome, TrainerOutcome]


@dataclasses.dataclass(frozen=True)
class TransferLogEntry:
    round_index: int
    source_trainer: int
    dest_trainer: int
    networks: tuple[str, ...]
    checksums: dict[str, str]
    nbytes: int


def hash_seed(*values: int) -> int:
    return int(np.random.SeedSequence(list(values)).generate_state(1)[0])


def partition_dataset(ids, k: int, seed: int) -> list[np.ndarray]:
    """Split ids into k disjoint parts whose sizes differ by at most one; each part is sorted."""
    ids = np.asarray(ids, dtype=np.int64)
    if k < 1:
        raise ContractError("partition_dataset", f"k must be >= 1, got {k}")
    if k > len(ids):
        raise ContractError("partition_dataset", f"cannot split {len(ids)} ids into {k} partitions")
    rng = np.random.Generator(np.random.PCG64(seed))
    shuffled = ids[rng.permutation(len(ids))]
    return [np.sort(part) for part in np.array_split(shuffled, k)]


def pair_trainers(k: int, round_index: int, seed: int) -> Matching:
    """
    Uniform random matching of k trainers for one round. With odd k the last
    trainer of the seeded permutation sits the round out.
    """
    if k < 2:
        return Matching(round_index=round_index, pairs=())
    rng = np.random.Generator(np.random.PCG64([seed, round_index]))
    order = [int(t) for t in rng.permutation(k)]
    bye = order.pop() if k % 2 else None
    pairs = tuple((order[i], order[i + 1]) for i in range(0, len(order), 2))
    return Matching(round_index=round_index, pairs=pairs, bye=bye)


def choose_winner(local: EvalMetric, incoming: EvalMetric) -> Winner:
    """Lower combined metric wins; non-finite candidates lose; ties keep the local generator."""
    local_ok, incoming_ok = local.is_finite(), incoming.is_finite()
    if incoming_ok and (not local_ok or incoming.combined < local.combined):
        return Winner.INCOMING
    return Winner.LOCAL


def _judge(trainer: Trainer, incoming: GeneratorSnapshot, round_index: int) -> tuple[EvalMetric, EvalMetric, Winner]:
    log = trainer.log.bind(round_index=round_index)
    local_metric = trainer.evaluate_tournament()
    local_snapshot = trainer.generator_snapshot()
    trainer.model.install_generator(incoming, fresh_optimizer=False)
    try:
        incoming_metric = trainer.evaluate_tournament()
    finally:
        trainer.model.install_generator(local_snapshot, fresh_optimizer=False)
    winner = choose_winner(local_metric, incoming_metric)
    if not local_metric.is_finite() and not incoming_metric.is_finite():
        log.warning("Both candidate generators have non-finite metrics, keeping local")
    return local_metric, incoming_metric, winner


def tournament_round(
    trainers: list[Trainer],
    matching: Matching,
    config: LtfbConfig | None = None,
    transfer_log: list[TransferLogEntry] | None = None,
) -> list[TournamentEvent]:
    """
    Play one round. All trainers must be at the same step. Snapshots are
    taken from every trainer before any generator is replaced.
    """
    config = config or LtfbConfig(k_trainers=len(trainers))
    steps = {t.step for t in trainers}
    if len(steps) > 1:
        raise ContractError("tournament_round", f"trainers are at different steps {sorted(steps)}")
    step = steps.pop() if steps else 0
    by_id = {t.trainer_id: t for t in trainers}
    log = logger.bind(round_index=matching.round_index, step=step)

    if matching.bye is not None:
        log.warning("Trainer sits out the round", bye=matching.bye)

    snapshots = {tid: by_id[tid].generator_snapshot() for pair in matching.pairs for tid in pair}

    events = []
    for a, b in matching.pairs:
        outcomes = []
        for local_id, partner_id in ((a, b), (b, a)):
            trainer = by_id[local_id]
            incoming = snapshots[partner_id]
            if transfer_log is not None:
                transfer_log.append(
                    TransferLogEntry(
                        round_index=matching.round_index,
                        source_trainer=partner_id,
                        dest_trainer=local_id,
                        networks=incoming.networks,
                        checksums=dict(incoming.checksums),
                        nbytes=incoming.nbytes,
                    )
                )
            local_metric, incoming_metric, winner = _judge(trainer, incoming, matching.round_index)
            outcomes.append(
                TrainerOutcome(
                    trainer_id=local_id,
                    partner_id=partner_id,
                    local_metric=local_metric,
                    incoming_metric=incoming_metric,
                    winner=winner,
                    local_checksums=dict(snapshots[local_id].checksums),
                    incoming_checksums=dict(incoming.checksums),
                )
            )
        events.append(TournamentEvent(matching.round_index, step, (a, b), tuple(outcomes)))

    for event in events:
        for outcome in event.outcomes:
            trainer = by_id[outcome.trainer_id]
            if outcome.winner is Winner.INCOMING:
                trainer.install_generator(snapshots[outcome.partner_id], fresh_optimizer=config.fresh_optimizer)
                if config.reset_discriminator:
                    seed = hash_seed(config.pairing_seed, matching.round_index, trainer.trainer_id)
                    trainer.reset_discriminator(seed)
            log.info(
                "Tournament outcome",
                trainer_id=outcome.trainer_id,
                partner_id=outcome.partner_id,
                local=outcome.local_metric.combined,
                incoming=outcome.incoming_metric.combined,
                winner=outcome.winner.value,
            )
    return events


def audit_transfers(transfer_log: list[TransferLogEntry]) -> None:
    """Raise if any logged transfer carried networks other than the generator side."""
    for entry in transfer_log:
        if set(entry.networks) != set(GENERATOR_NETWORKS):
            raise ContractError(
                "audit_transfers",
                f"round {entry.round_index}: trainer {entry.source_trainer} sent {entry.networks}",
            )
