from ltfbgan.surrogate.CycleGanModel import (
    GENERATOR_NETWORKS,
    NETWORKS,
    CycleGanModel,
    EvalMetric,
    GeneratorLosses,
    GeneratorSnapshot,
    LossWeights,
    SurrogateArch,
    autoencoder_step,
    discriminator_step,
    evaluate,
    generator_step,
    pretrain_autoencoder,
)
from ltfbgan.surrogate.ModalityDims import ModalityDims

__all__ = [
    "GENERATOR_NETWORKS",
    "NETWORKS",
    "CycleGanModel",
    "EvalMetric",
    "GeneratorLosses",
    "GeneratorSnapshot",
    "LossWeights",
    "ModalityDims",
    "SurrogateArch",
    "autoencoder_step",
    "discriminator_step",
    "evaluate",
    "generator_step",
    "pretrain_autoencoder",
]
