from __future__ import annotations

import dataclasses
import statistics

import structlog

from ltfbgan.commands.generate_data import ensure_dataset
from ltfbgan.config.CompareConfig import CompareConfig
from ltfbgan.RunHistory import RunHistory, write_csv
from ltfbgan.tournament.orchestration import run_k_independent, run_ltfb

logger = structlog.getLogger(__name__)

COMPARISON_FILE_NAME = "comparison.csv"
COMPARISON_COLUMNS = ("k_trainers", "seed", "ltfb_combined", "k_independent_combined", "gap", "ltfb_better")


def compare(config: CompareConfig) -> list[dict]:
    """
    Paired LTFB and K-independent runs: both arms of a pair share seed, trainer
    count, partitions and step budget and differ only in the tournament rounds.
    """
    catalog = ensure_dataset(config)
    config.save(config.out_dir)

    rows = []
    for k in config.trainer_counts:
        for seed in config.seeds:
            run_config = dataclasses.replace(config, trainers=k, seed=seed, mode="ltfb")
            arm_dir = config.out_dir / f"k{k}-seed{seed}"
            with RunHistory(arm_dir / "ltfb") as history:
                ltfb = run_ltfb(run_config, catalog, history)
                history.write_summary()
            with RunHistory(arm_dir / "k-independent") as history:
                independent = run_k_independent(run_config, catalog, history)
                history.write_summary()

            gap = ltfb.best_metric.combined - independent.best_metric.combined
            rows.append(
                {
                    "k_trainers": k,
                    "seed": seed,
                    "ltfb_combined": ltfb.best_metric.combined,
                    "k_independent_combined": independent.best_metric.combined,
                    "gap": gap,
                    "ltfb_better": gap <= 0,
                }
            )
            logger.info("Pair finished", k_trainers=k, seed=seed, gap=gap)

        gaps = [r["gap"] for r in rows if r["k_trainers"] == k]
        logger.info(
            "Trainer count finished",
            k_trainers=k,
            ltfb_wins=sum(g <= 0 for g in gaps),
            pairs=len(gaps),
            median_gap=statistics.median(gaps),
        )

    write_csv(config.out_dir / COMPARISON_FILE_NAME, COMPARISON_COLUMNS, rows)
    return rows
