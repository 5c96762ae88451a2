from __future__ import annotations

import dataclasses

import numpy as np

from ltfbgan.ContractError import ContractError

# Named, seedable generator family used for every epoch permutation.
PERMUTATION_PRNG = "PCG64"


@dataclasses.dataclass(frozen=True)
class Transfer:
    """Samples moved from the shard that caches them to the shard that consumes them."""

    source_shard: int
    dest_shard: int
    sample_ids: tuple[int, ...]


@dataclasses.dataclass(frozen=True)
class PlannedStep:
    index: int
    consumer_ids: tuple[tuple[int, ...], ...]
    # None while ownership is still unknown (dynamic store, first epoch).
    transfers: tuple[Transfer, ...] | None

    @property
    def sample_ids(self) -> tuple[int, ...]:
        return tuple(sid for ids in self.consumer_ids for sid in ids)

    @property
    def size(self) -> int:
        return sum(len(ids) for ids in self.consumer_ids)


@dataclasses.dataclass(frozen=True)
class EpochPlan:
    epoch: int
    seed: int
    batch_size: int
    permutation: tuple[int, ...]
    steps: tuple[PlannedStep, ...]

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def epoch_permutation(partition: np.ndarray, epoch: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(getattr(np.random, PERMUTATION_PRNG)([seed, epoch]))
    return partition[rng.permutation(len(partition))]


def transfers_for(consumer_ids: tuple[tuple[int, ...], ...], owner_of: dict[int, int]) -> tuple[Transfer, ...]:
    moves: dict[tuple[int, int], list[int]] = {}
    for consumer, ids in enumerate(consumer_ids):
        for sid in ids:
            owner = owner_of[sid]
            if owner != consumer:
                moves.setdefault((owner, consumer), []).append(sid)
    return tuple(Transfer(src, dst, tuple(ids)) for (src, dst), ids in sorted(moves.items()))


def build_plan(
    partition: np.ndarray,
    epoch: int,
    seed: int,
    batch_size: int,
    n_shards: int,
    owner_of: dict[int, int] | None,
) -> EpochPlan:
    """
    Permute the partition, cut it into minibatches of batch_size (the last one
    may be short) and split every minibatch into n_shards contiguous consumer slices.
    """
    if len(partition) == 0:
        raise ContractError("plan_epoch", "empty partition")
    if batch_size < 1:
        raise ContractError("plan_epoch", f"batch_size must be >= 1, got {batch_size}")

    permutation = epoch_permutation(partition, epoch, seed)
    steps = []
    for index, start in enumerate(range(0, len(permutation), batch_size)):
        minibatch = permutation[start : start + batch_size]
        consumer_ids = tuple(tuple(int(s) for s in chunk) for chunk in np.array_split(minibatch, n_shards))
        transfers = transfers_for(consumer_ids, owner_of) if owner_of is not None else None
        steps.append(PlannedStep(index=index, consumer_ids=consumer_ids, transfers=transfers))

    return EpochPlan(
        epoch=epoch,
        seed=seed,
        batch_size=batch_size,
        permutation=tuple(int(s) for s in permutation),
        steps=tuple(steps),
    )
