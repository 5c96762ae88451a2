from __future__ import annotations

import numpy as np
import pytest

from ltfbgan.ContractError import ContractError, DimensionError
from ltfbgan.nn.losses import EPSILON, bce_loss, mae_loss


def test_mae_value_and_subgradient():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    target = np.array([[0.0, 2.0], [5.0, 3.5]])

    loss, grad = mae_loss(pred, target)

    assert loss == pytest.approx((1.0 + 0.0 + 2.0 + 0.5) / 4)
    np.testing.assert_allclose(grad, [[0.25, 0.0], [-0.25, 0.25]])


def test_bce_value_and_logit_gradient():
    pred = np.array([[0.8], [0.3]])
    labels = np.array([[1.0], [0.0]])

    loss, grad = bce_loss(pred, labels)

    assert loss == pytest.approx(-(np.log(0.8) + np.log(0.7)) / 2)
    np.testing.assert_allclose(grad, [[-0.1], [0.15]])


def test_bce_clamps_saturated_probabilities():
    loss, _ = bce_loss(np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]))
    assert np.isfinite(loss)
    assert loss == pytest.approx(-np.log(EPSILON), rel=1e-6)


@pytest.mark.parametrize(
    "loss_fn, pred, target, error",
    [
        pytest.param(mae_loss, np.zeros((2, 3)), np.zeros((3, 2)), DimensionError, id="mae shape"),
        pytest.param(mae_loss, np.zeros((0, 3)), np.zeros((0, 3)), ContractError, id="mae empty"),
        pytest.param(bce_loss, np.zeros((2, 1)), np.zeros((3, 1)), DimensionError, id="bce shape"),
        pytest.param(bce_loss, np.full((2, 1), 0.5), np.array([[1.0], [0.5]]), ContractError, id="bce labels"),
    ],
)
def test_invalid_inputs(loss_fn, pred, target, error):
    with pytest.raises(error):
        loss_fn(pred, target)
