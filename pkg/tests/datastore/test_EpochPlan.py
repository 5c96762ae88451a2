from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from ltfbgan.ContractError import ContractError
from ltfbgan.datastore.EpochPlan import Transfer, build_plan, transfers_for


def test_minibatch_slicing_keeps_the_short_last_batch():
    plan = build_plan(np.arange(1000), epoch=1, seed=0, batch_size=128, n_shards=4, owner_of=None)
    assert [step.size for step in plan.steps] == [128] * 7 + [104]
    assert sorted(plan.permutation) == list(range(1000))


@pytest.mark.parametrize("seed", [pytest.param(seed, id=f"seed {seed}") for seed in range(5)])
def test_each_sample_exactly_once_per_epoch(seed):
    partition = np.arange(3, 2003, 2)
    permutations = []
    for epoch in (1, 2, 3):
        plan = build_plan(partition, epoch=epoch, seed=seed, batch_size=64, n_shards=3, owner_of=None)
        delivered = [sid for step in plan.steps for sid in step.sample_ids]
        assert Counter(delivered) == Counter(partition.tolist())
        assert tuple(delivered) == plan.permutation
        permutations.append(plan.permutation)
    assert len(set(permutations)) == 3


def test_same_seed_and_epoch_give_the_same_plan():
    a = build_plan(np.arange(50), epoch=2, seed=9, batch_size=8, n_shards=2, owner_of=None)
    b = build_plan(np.arange(50), epoch=2, seed=9, batch_size=8, n_shards=2, owner_of=None)
    assert a == b


def test_single_sample_partition():
    plan = build_plan(np.array([7]), epoch=1, seed=0, batch_size=128, n_shards=4, owner_of=None)
    assert plan.permutation == (7,)
    assert plan.steps[0].consumer_ids == ((7,), (), (), ())


def test_consumer_slices_differ_by_at_most_one():
    plan = build_plan(np.arange(30), epoch=1, seed=1, batch_size=10, n_shards=4, owner_of=None)
    for step in plan.steps:
        sizes = [len(ids) for ids in step.consumer_ids]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == step.size


def test_single_shard_plans_no_transfers():
    owners = {sid: 0 for sid in range(20)}
    plan = build_plan(np.arange(20), epoch=1, seed=0, batch_size=6, n_shards=1, owner_of=owners)
    assert all(step.transfers == () for step in plan.steps)


def test_transfer_volume_counts_samples_owned_elsewhere():
    owners = {sid: sid % 2 for sid in range(100)}
    plan = build_plan(np.arange(100), epoch=1, seed=4, batch_size=16, n_shards=2, owner_of=owners)
    for step in plan.steps:
        moved = sum(len(t.sample_ids) for t in step.transfers)
        expected = sum(owners[sid] != consumer for consumer, ids in enumerate(step.consumer_ids) for sid in ids)
        assert moved == expected


def test_transfers_are_grouped_by_shard_pair():
    consumer_ids = ((4, 1, 2), (3, 0))
    owners = {0: 0, 1: 1, 2: 1, 3: 1, 4: 0}
    assert transfers_for(consumer_ids, owners) == (Transfer(0, 1, (0,)), Transfer(1, 0, (1, 2)))


def test_unknown_ownership_leaves_transfers_unplanned():
    plan = build_plan(np.arange(10), epoch=1, seed=0, batch_size=4, n_shards=2, owner_of=None)
    assert all(step.transfers is None for step in plan.steps)


@pytest.mark.parametrize(
    "partition, batch_size",
    [
        pytest.param(np.array([], dtype=np.int64), 4, id="empty partition"),
        pytest.param(np.arange(10), 0, id="zero batch"),
    ],
)
def test_invalid_plans(partition, batch_size):
    with pytest.raises(ContractError):
        build_plan(partition, epoch=1, seed=0, batch_size=batch_size, n_shards=2, owner_of=None)
