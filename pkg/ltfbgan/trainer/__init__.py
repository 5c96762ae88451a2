from ltfbgan.trainer.Trainer import EpochRecord, StepRecord, Trainer, TrainerConfig, allreduce_gradients

__all__ = ["EpochRecord", "StepRecord", "Trainer", "TrainerConfig", "allreduce_gradients"]
