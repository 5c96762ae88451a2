from ltfbgan.nn.adam import AdamHyper, AdamState, adam_step
from ltfbgan.nn.losses import bce_loss, mae_loss
from ltfbgan.nn.mlp import Activation, DenseTensor, MlpParams, MlpSpec, Tape, init_params, mlp_backward, mlp_forward

__all__ = [
    "Activation",
    "AdamHyper",
    "AdamState",
    "DenseTensor",
    "MlpParams",
    "MlpSpec",
    "Tape",
    "adam_step",
    "bce_loss",
    "init_params",
    "mae_loss",
    "mlp_backward",
    "mlp_forward",
]
