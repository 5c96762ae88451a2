"""
CycleGAN surrogate: a pre-trained multimodal autoencoder (encoder / decoder),
a forward model F from inputs to the latent space, an inverse model G back to
inputs, and a latent-space discriminator D.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError, DimensionError
from ltfbgan.nn.adam import AdamHyper, AdamState, adam_step
from ltfbgan.nn.losses import bce_loss, mae_loss
from ltfbgan.nn.mlp import Activation, MlpParams, MlpSpec, init_params, mlp_backward, mlp_forward
from ltfbgan.NumericError import NumericError
from ltfbgan.surrogate.ModalityDims import ModalityDims

logger = structlog.getLogger(__name__)

NETWORKS = ("encoder", "decoder", "forward", "inverse", "discriminator")
AUTOENCODER_NETWORKS = ("encoder", "decoder")
# The payload exchanged between trainers in a tournament round.
GENERATOR_NETWORKS = ("forward", "inverse")


@dataclasses.dataclass(frozen=True)
class SurrogateArch:
    encoder_hidden: tuple[int, ...] = (64, 32)
    decoder_hidden: tuple[int, ...] = (32, 64)
    forward_hidden: tuple[int, ...] = (32, 32)
    inverse_hidden: tuple[int, ...] = (32, 32)
    discriminator_hidden: tuple[int, ...] = (32, 16)
    hidden_activation: Activation = Activation.LEAKY_RELU
    leaky_slope: float = 0.2
    dtype: str = "float32"

    def specs(self, dims: ModalityDims, seed: int) -> dict[str, MlpSpec]:
        boundaries = {
            "encoder": (dims.output_dim, self.encoder_hidden, dims.latent_dim, Activation.IDENTITY),
            "decoder": (dims.latent_dim, self.decoder_hidden, dims.output_dim, Activation.IDENTITY),
            "forward": (dims.input_dim, self.forward_hidden, dims.latent_dim, Activation.IDENTITY),
            "inverse": (dims.latent_dim, self.inverse_hidden, dims.input_dim, Activation.IDENTITY),
            "discriminator": (dims.latent_dim, self.discriminator_hidden, 1, Activation.SIGMOID),
        }
        seeds = np.random.SeedSequence(seed).generate_state(len(NETWORKS), dtype=np.uint32)
        specs = {}
        for name, network_seed in zip(NETWORKS, seeds, strict=True):
            fan_in, hidden, fan_out, output_activation = boundaries[name]
            specs[name] = MlpSpec(
                layer_widths=(fan_in, *hidden, fan_out),
                activations=(*([self.hidden_activation] * len(hidden)), output_activation),
                init_seed=int(network_seed),
                leaky_slope=self.leaky_slope,
                dtype=self.dtype,
            )
        return specs


@dataclasses.dataclass(frozen=True)
class LossWeights:
    adversarial: float = 0.01
    cycle: float = 1.0
    eval_forward: float = 1.0
    eval_inverse: float = 1.0


@dataclasses.dataclass(frozen=True)
class EvalMetric:
    forward_mae: float
    inverse_mae: float
    combined: float
    # Forward error split by output modality; reported only, never part of combined.
    scalar_mae: float | None = None
    image_mae: float | None = None

    def is_finite(self) -> bool:
        return bool(np.isfinite([self.forward_mae, self.inverse_mae, self.combined]).all())

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class GeneratorLosses:
    total: float
    forward: float
    adversarial: float
    cycle: float
    scalar: float
    image: float


def modality_mae(dims: ModalityDims, predicted: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    """
    MAE over the scalar columns and over the image columns of an output batch.

    The forward loss itself weighs every output element equally, so it equals
    (scalar_dim * scalar + image_size * image) / output_dim.
    """
    diff = np.abs(predicted - target)
    scalar = float(np.mean(diff[:, : dims.scalar_dim], dtype=np.float64))
    image = float(np.mean(diff[:, dims.scalar_dim :], dtype=np.float64))
    return scalar, image


@dataclasses.dataclass(frozen=True)
class GeneratorSnapshot:
    """Immutable copy of the generator-side networks of one trainer's model."""

    source_trainer: int
    params: dict[str, MlpParams]
    checksums: dict[str, str]

    @property
    def networks(self) -> tuple[str, ...]:
        return tuple(self.params)

    @property
    def nbytes(self) -> int:
        return sum(p.flatten().nbytes for p in self.params.values())


@dataclasses.dataclass
class CycleGanModel:
    dims: ModalityDims
    specs: dict[str, MlpSpec]
    params: dict[str, MlpParams]
    optimizers: dict[str, AdamState]
    loss_weights: LossWeights = dataclasses.field(default_factory=LossWeights)
    autoencoder_frozen: bool = False

    def __post_init__(self):
        for name in NETWORKS:
            if name not in self.specs or name not in self.params:
                raise ContractError("CycleGanModel", f"missing network {name}")
        expected = {
            "encoder": (self.dims.output_dim, self.dims.latent_dim),
            "decoder": (self.dims.latent_dim, self.dims.output_dim),
            "forward": (self.dims.input_dim, self.dims.latent_dim),
            "inverse": (self.dims.latent_dim, self.dims.input_dim),
            "discriminator": (self.dims.latent_dim, 1),
        }
        for name, (fan_in, fan_out) in expected.items():
            spec = self.specs[name]
            if (spec.input_width, spec.output_width) != (fan_in, fan_out):
                raise DimensionError("CycleGanModel", name, (fan_in, fan_out), (spec.input_width, spec.output_width))
        if self.specs["discriminator"].activations[-1] is not Activation.SIGMOID:
            raise ContractError("CycleGanModel", "the discriminator must end in a sigmoid")

    @classmethod
    def create(
        cls,
        dims: ModalityDims | None = None,
        arch: SurrogateArch | None = None,
        seed: int = 0,
        hyper: AdamHyper | None = None,
        loss_weights: LossWeights | None = None,
    ) -> CycleGanModel:
        dims = dims or ModalityDims()
        specs = (arch or SurrogateArch()).specs(dims, seed)
        return cls.from_specs(dims, specs, hyper=hyper, loss_weights=loss_weights)

    @classmethod
    def from_specs(
        cls,
        dims: ModalityDims,
        specs: dict[str, MlpSpec],
        hyper: AdamHyper | None = None,
        loss_weights: LossWeights | None = None,
    ) -> CycleGanModel:
        params = {name: init_params(spec) for name, spec in specs.items()}
        return cls(
            dims=dims,
            specs=dict(specs),
            params=params,
            optimizers={name: AdamState.fresh(p, hyper) for name, p in params.items()},
            loss_weights=loss_weights or LossWeights(),
        )

    def copy(self) -> CycleGanModel:
        return dataclasses.replace(
            self,
            specs=dict(self.specs),
            params={name: p.copy() for name, p in self.params.items()},
            optimizers=dict(self.optimizers),
        )

    def checksum(self, network: str) -> str:
        return self.params[network].checksum()

    def checksums(self) -> dict[str, str]:
        return {name: self.checksum(name) for name in NETWORKS}

    @property
    def learning_rate(self) -> float:
        return self.optimizers["forward"].hyper.lr

    def set_learning_rate(self, lr: float) -> None:
        for name, state in self.optimizers.items():
            self.optimizers[name] = dataclasses.replace(state, hyper=dataclasses.replace(state.hyper, lr=lr))

    def freeze_autoencoder(self) -> None:
        self.autoencoder_frozen = True

    def install_autoencoder(self, other: CycleGanModel) -> None:
        """Copy a pre-trained encoder/decoder pair into this model and freeze it."""
        for name in AUTOENCODER_NETWORKS:
            self.specs[name] = other.specs[name]
            self.params[name] = other.params[name].copy()
            self.optimizers[name] = other.optimizers[name]
        self.autoencoder_frozen = True

    def generator_snapshot(self, source_trainer: int) -> GeneratorSnapshot:
        params = {name: self.params[name].copy() for name in GENERATOR_NETWORKS}
        return GeneratorSnapshot(
            source_trainer=source_trainer,
            params=params,
            checksums={name: p.checksum() for name, p in params.items()},
        )

    def install_generator(self, snapshot: GeneratorSnapshot, fresh_optimizer: bool = True) -> None:
        if set(snapshot.networks) != set(GENERATOR_NETWORKS):
            raise ContractError("install_generator", f"snapshot carries {snapshot.networks}")
        for name in GENERATOR_NETWORKS:
            incoming = snapshot.params[name]
            if incoming.manifest != self.params[name].manifest:
                raise DimensionError("install_generator", name, self.params[name].size, incoming.size)
            self.params[name].retire()
            self.params[name] = incoming.copy()
            if fresh_optimizer:
                self.optimizers[name] = self.optimizers[name].with_fresh_moments()

    def reset_discriminator(self, seed: int) -> None:
        spec = self.specs["discriminator"].with_seed(seed)
        self.specs["discriminator"] = spec
        self.params["discriminator"].retire()
        self.params["discriminator"] = init_params(spec)
        self.optimizers["discriminator"] = AdamState.fresh(
            self.params["discriminator"], self.optimizers["discriminator"].hyper
        )

    def apply_gradients(self, grads: dict[str, MlpParams]) -> None:
        """
        Apply one Adam step to each named network. All updates are computed
        before any is committed, so a non-finite gradient leaves the model unchanged.
        """
        if self.autoencoder_frozen and any(name in AUTOENCODER_NETWORKS for name in grads):
            raise ContractError("apply_gradients", "encoder/decoder are frozen")
        updated = {}
        for name, grad in grads.items():
            updated[name] = adam_step(self.params[name], grad, self.optimizers[name], retire=False)
        for name, (params, state) in updated.items():
            self.params[name].retire()
            self.params[name] = params
            self.optimizers[name] = state

    def forward(self, network: str, batch: np.ndarray) -> np.ndarray:
        output, _ = mlp_forward(self.specs[network], self.params[network], batch)
        return output


def _check_batch(operation: str, dims: ModalityDims, x: np.ndarray | None, y: np.ndarray | None) -> None:
    if x is not None and (x.ndim != 2 or x.shape[1] != dims.input_dim):
        raise DimensionError(operation, "inputs", dims.input_dim, tuple(x.shape))
    if y is not None and (y.ndim != 2 or y.shape[1] != dims.output_dim):
        raise DimensionError(operation, "outputs", dims.output_dim, tuple(y.shape))
    if x is not None and y is not None and x.shape[0] != y.shape[0]:
        raise DimensionError(operation, "batch rows", x.shape[0], y.shape[0])


def _require_finite(operation: str, **values: float) -> None:
    for name, value in values.items():
        if not np.isfinite(value):
            raise NumericError(operation, f"non-finite {name} loss, step skipped", quantity=name)


def autoencoder_gradients(model: CycleGanModel, batch_outputs: np.ndarray) -> tuple[float, dict[str, MlpParams]]:
    if model.autoencoder_frozen:
        raise ContractError("autoencoder_step", "encoder/decoder are frozen")
    _check_batch("autoencoder_step", model.dims, None, batch_outputs)

    y = batch_outputs.astype(model.specs["encoder"].np_dtype, copy=False)
    latent, encoder_tape = mlp_forward(model.specs["encoder"], model.params["encoder"], y)
    reconstruction, decoder_tape = mlp_forward(model.specs["decoder"], model.params["decoder"], latent)
    loss, grad = mae_loss(reconstruction, y)
    _require_finite("autoencoder_step", reconstruction=loss)

    decoder_grads, grad_latent = mlp_backward(decoder_tape, grad)
    encoder_grads, _ = mlp_backward(encoder_tape, grad_latent)
    return loss, {"encoder": encoder_grads, "decoder": decoder_grads}


def autoencoder_step(model: CycleGanModel, batch_outputs: np.ndarray) -> float:
    loss, grads = autoencoder_gradients(model, batch_outputs)
    model.apply_gradients(grads)
    return loss


def generator_gradients(
    model: CycleGanModel, x: np.ndarray, y: np.ndarray
) -> tuple[GeneratorLosses, dict[str, MlpParams]]:
    """
    Gradients of  MAE(Dec(F(x)), y) + l_adv * -log D(F(x)) + l_cyc * MAE(G(F(x)), x)
    with respect to F and G. Decoder and discriminator only pass gradients through.
    """
    _check_batch("generator_step", model.dims, x, y)
    weights = model.loss_weights
    specs, params = model.specs, model.params
    dtype = specs["forward"].np_dtype
    x = x.astype(dtype, copy=False)
    y = y.astype(dtype, copy=False)

    latent, forward_tape = mlp_forward(specs["forward"], params["forward"], x)

    predicted, decoder_tape = mlp_forward(specs["decoder"], params["decoder"], latent)
    loss_fwd, grad_pred = mae_loss(predicted, y)
    _, grad_latent_fwd = mlp_backward(decoder_tape, grad_pred)

    judged, disc_tape = mlp_forward(specs["discriminator"], params["discriminator"], latent)
    loss_adv, grad_logits = bce_loss(judged, np.ones_like(judged))
    _, grad_latent_adv = mlp_backward(disc_tape, weights.adversarial * grad_logits, through_output_activation=False)

    recovered, inverse_tape = mlp_forward(specs["inverse"], params["inverse"], latent)
    loss_cyc, grad_rec = mae_loss(recovered, x)
    inverse_grads, grad_latent_cyc = mlp_backward(inverse_tape, weights.cycle * grad_rec)

    total = loss_fwd + weights.adversarial * loss_adv + weights.cycle * loss_cyc
    _require_finite("generator_step", total=total)

    forward_grads, _ = mlp_backward(forward_tape, grad_latent_fwd + grad_latent_adv + grad_latent_cyc)
    scalar, image = modality_mae(model.dims, predicted, y)
    losses = GeneratorLosses(
        total=total, forward=loss_fwd, adversarial=loss_adv, cycle=loss_cyc, scalar=scalar, image=image
    )
    return losses, {"forward": forward_grads, "inverse": inverse_grads}


def generator_step(model: CycleGanModel, x: np.ndarray, y: np.ndarray) -> GeneratorLosses:
    losses, grads = generator_gradients(model, x, y)
    model.apply_gradients(grads)
    return losses


def discriminator_gradients(model: CycleGanModel, x: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, MlpParams]]:
    """Real examples are encoder latents E(y) (label 1); fakes are F(x) (label 0)."""
    _check_batch("discriminator_step", model.dims, x, y)
    real = model.forward("encoder", y)
    fake = model.forward("forward", x)
    latents = np.concatenate([real, fake], axis=0)
    labels = np.concatenate([np.ones((len(real), 1)), np.zeros((len(fake), 1))]).astype(latents.dtype)

    judged, disc_tape = mlp_forward(model.specs["discriminator"], model.params["discriminator"], latents)
    loss, grad_logits = bce_loss(judged, labels)
    _require_finite("discriminator_step", discriminator=loss)
    disc_grads, _ = mlp_backward(disc_tape, grad_logits, through_output_activation=False)
    return loss, {"discriminator": disc_grads}


def discriminator_step(model: CycleGanModel, x: np.ndarray, y: np.ndarray) -> float:
    loss, grads = discriminator_gradients(model, x, y)
    model.apply_gradients(grads)
    return loss


def evaluate(model: CycleGanModel, x: np.ndarray, y: np.ndarray) -> EvalMetric:
    """Forward and inverse MAE on a data slice; the adversarial term is not part of the metric."""
    if x is None or len(x) == 0:
        raise ContractError("evaluate", "empty data slice")
    _check_batch("evaluate", model.dims, x, y)
    dtype = model.specs["forward"].np_dtype
    x = x.astype(dtype, copy=False)
    y = y.astype(dtype, copy=False)

    latent = model.forward("forward", x)
    predicted = model.forward("decoder", latent)
    forward_mae, _ = mae_loss(predicted, y)
    inverse_mae, _ = mae_loss(model.forward("inverse", latent), x)
    scalar_mae, image_mae = modality_mae(model.dims, predicted, y)
    weights = model.loss_weights
    combined = weights.eval_forward * forward_mae + weights.eval_inverse * inverse_mae
    return EvalMetric(
        forward_mae=forward_mae,
        inverse_mae=inverse_mae,
        combined=combined,
        scalar_mae=scalar_mae,
        image_mae=image_mae,
    )


def pretrain_autoencoder(
    model: CycleGanModel,
    outputs: np.ndarray,
    steps: int,
    batch_size: int,
    seed: int,
) -> list[float]:
    """Train encoder/decoder on random minibatches of outputs, then freeze them."""
    rng = np.random.default_rng(seed)
    losses = []
    for step in range(steps):
        rows = rng.choice(len(outputs), size=min(batch_size, len(outputs)), replace=False)
        try:
            losses.append(autoencoder_step(model, outputs[rows]))
        except NumericError as e:
            logger.warning("Skipping autoencoder step", **{**e.get_structured_error(), "step": step})
        if step % 500 == 0:
            logger.debug("Autoencoder pre-training", step=step, loss=losses[-1] if losses else None)
    model.freeze_autoencoder()
    logger.info("Autoencoder pre-trained", steps=steps, final_loss=losses[-1] if losses else None)
    return losses
