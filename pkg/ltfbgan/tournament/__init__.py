from ltfbgan.tournament.ltfb import (
    LtfbConfig,
    Matching,
    TournamentEvent,
    TrainerOutcome,
    TransferLogEntry,
    Winner,
    audit_transfers,
    choose_winner,
    hash_seed,
    pair_trainers,
    partition_dataset,
    tournament_round,
)

__all__ = [
    "LtfbConfig",
    "Matching",
    "TournamentEvent",
    "TrainerOutcome",
    "TransferLogEntry",
    "Winner",
    "audit_transfers",
    "choose_winner",
    "hash_seed",
    "pair_trainers",
    "partition_dataset",
    "tournament_round",
]
