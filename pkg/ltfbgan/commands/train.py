from __future__ import annotations

import structlog

from ltfbgan.commands.generate_data import ensure_dataset
from ltfbgan.config.TrainConfig import TrainConfig
from ltfbgan.RunHistory import RunHistory
from ltfbgan.surrogate.checkpoint import save_checkpoint
from ltfbgan.tournament.orchestration import RunResult, run_training

logger = structlog.getLogger(__name__)

CHECKPOINT_FILE_NAME = "model.ltck"


def train(config: TrainConfig) -> RunResult:
    """
    Run one training orchestration and leave a self-describing run directory:
    config copy, history log, summary, timings and the best model.
    """
    catalog = ensure_dataset(config)
    config.save(config.out_dir)

    with RunHistory(config.out_dir) as history:
        result = run_training(config, catalog, history)
        rows = history.write_summary()

    if config.save_model:
        path = save_checkpoint(result.best_model, config.out_dir / CHECKPOINT_FILE_NAME)
        logger.info("Best model saved", path=str(path), trainer_id=result.best_trainer)

    for row in rows:
        logger.info(
            "Trainer summary",
            trainer_id=row["trainer_id"],
            combined=row["combined"],
            rounds=row["rounds"],
            incoming_wins=row["incoming_wins"],
            is_best=row["is_best"],
        )
    return result
