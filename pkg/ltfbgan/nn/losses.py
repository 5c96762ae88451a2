from __future__ import annotations

import numpy as np

from ltfbgan.ContractError import ContractError, DimensionError
from ltfbgan.nn.mlp import DenseTensor

# Probabilities are clamped to [EPSILON, 1 - EPSILON] before taking logs.
EPSILON = 1e-7


def mae_loss(pred: DenseTensor, target: DenseTensor) -> tuple[float, DenseTensor]:
    """Mean absolute error over all elements; the subgradient at a zero difference is 0."""
    if pred.shape != target.shape:
        raise DimensionError("mae_loss", "prediction", tuple(target.shape), tuple(pred.shape))
    if pred.size == 0:
        raise ContractError("mae_loss", "empty tensors")
    diff = pred - target
    loss = float(np.mean(np.abs(diff), dtype=np.float64))
    grad = (np.sign(diff) / diff.size).astype(pred.dtype, copy=False)
    return loss, grad


def bce_loss(pred_prob: DenseTensor, labels: DenseTensor) -> tuple[float, DenseTensor]:
    """
    Mean binary cross-entropy of sigmoid outputs.

    The returned gradient is with respect to the pre-sigmoid logits, i.e. (p - y) / N.
    """
    if pred_prob.shape != labels.shape:
        raise DimensionError("bce_loss", "labels", tuple(pred_prob.shape), tuple(labels.shape))
    if pred_prob.size == 0:
        raise ContractError("bce_loss", "empty tensors")
    if not np.isin(labels, (0, 1)).all():
        raise ContractError("bce_loss", "labels must be 0 or 1")

    p = np.clip(pred_prob.astype(np.float64), EPSILON, 1 - EPSILON)
    y = labels.astype(np.float64)
    loss = float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))
    grad = ((p - y) / p.size).astype(pred_prob.dtype, copy=False)
    return loss, grad
