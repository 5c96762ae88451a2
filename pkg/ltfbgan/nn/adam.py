from __future__ import annotations

import dataclasses

import numpy as np

from ltfbgan.ContractError import DimensionError
from ltfbgan.nn.mlp import MlpParams
from ltfbgan.NumericError import NumericError


@dataclasses.dataclass(frozen=True)
class AdamHyper:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclasses.dataclass(frozen=True)
class AdamState:
    m: MlpParams
    v: MlpParams
    t: int = 0
    hyper: AdamHyper = dataclasses.field(default_factory=AdamHyper)

    @classmethod
    def fresh(cls, params: MlpParams, hyper: AdamHyper | None = None) -> AdamState:
        return cls(m=params.zeros_like(), v=params.zeros_like(), t=0, hyper=hyper or AdamHyper())

    def with_fresh_moments(self) -> AdamState:
        """Zero both moments but keep the step count."""
        return dataclasses.replace(self, m=self.m.zeros_like(), v=self.v.zeros_like())


def adam_step(
    params: MlpParams, grads: MlpParams, state: AdamState, retire: bool = True
) -> tuple[MlpParams, AdamState]:
    """
    One bias-corrected Adam update. Returns new params and state; input values are left untouched.

    With retire=True the old params are marked superseded, so a tape recorded
    with them can no longer be backpropagated.
    """
    if grads.manifest != params.manifest:
        raise DimensionError("adam_step", "gradient manifest", params.size, grads.size)

    g = grads.flatten().astype(params.dtype, copy=False)
    if not np.isfinite(g).all():
        raise NumericError("adam_step", "non-finite gradient component, step not applied", quantity="gradient")

    hyper = state.hyper
    t = state.t + 1
    m = hyper.beta1 * state.m.flatten() + (1 - hyper.beta1) * g
    v = hyper.beta2 * state.v.flatten() + (1 - hyper.beta2) * (g * g)
    m_hat = m / (1 - hyper.beta1**t)
    v_hat = v / (1 - hyper.beta2**t)
    p = params.flatten() - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)

    manifest = params.manifest
    new_state = AdamState(
        m=MlpParams.unflatten(manifest, m.astype(params.dtype, copy=False)),
        v=MlpParams.unflatten(manifest, v.astype(params.dtype, copy=False)),
        t=t,
        hyper=hyper,
    )
    new_params = MlpParams.unflatten(manifest, p.astype(params.dtype, copy=False))
    if retire:
        params.retire()
    return new_params, new_state
