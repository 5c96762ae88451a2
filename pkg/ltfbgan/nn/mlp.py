"""
Stacked fully-connected layers with an explicit activation tape.

Weights are stored input-major (``fan_in x fan_out``) so a layer computes
``z = x @ W + b`` on a row-major batch.
"""

from __future__ import annotations

import dataclasses
import hashlib
from enum import Enum

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError, DimensionError

logger = structlog.getLogger(__name__)

# A dense tensor is a row-major numpy array; every vector and matrix in the package is one.
DenseTensor = np.ndarray


class Activation(str, Enum):
    IDENTITY = "identity"
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"


@dataclasses.dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple[int, ...]
    activations: tuple[Activation, ...]
    init_seed: int = 0
    leaky_slope: float = 0.01
    dtype: str = "float32"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        activations = tuple(Activation(a) for a in self.activations)
        object.__setattr__(self, "layer_widths", widths)
        object.__setattr__(self, "activations", activations)

        if len(widths) < 2:
            raise ContractError("MlpSpec", f"at least two layer widths are required, got {widths}")
        if any(w < 1 for w in widths):
            raise ContractError("MlpSpec", f"layer widths must be >= 1, got {widths}")
        if len(activations) != len(widths) - 1:
            raise ContractError(
                "MlpSpec",
                f"{len(widths) - 1} activations required for widths {widths}, got {len(activations)}",
            )
        if self.dtype not in ("float32", "float64"):
            raise ContractError("MlpSpec", f"unsupported dtype {self.dtype}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    @property
    def np_dtype(self) -> np.dtype:
        return np.dtype(self.dtype)

    def with_seed(self, init_seed: int) -> MlpSpec:
        return dataclasses.replace(self, init_seed=init_seed)

    def to_dict(self) -> dict:
        return {
            "layer_widths": list(self.layer_widths),
            "activations": [a.value for a in self.activations],
            "init_seed": self.init_seed,
            "leaky_slope": self.leaky_slope,
            "dtype": self.dtype,
        }


@dataclasses.dataclass(frozen=True)
class ManifestEntry:
    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


@dataclasses.dataclass
class MlpParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    # Set once an update has replaced these parameters; tapes recorded with them go stale.
    superseded: bool = dataclasses.field(default=False, init=False, repr=False, compare=False)

    def retire(self) -> None:
        self.superseded = True

    @property
    def manifest(self) -> tuple[ManifestEntry, ...]:
        entries = []
        offset = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            entries.append(ManifestEntry(f"layer{i}.weight", offset, tuple(w.shape)))
            offset += w.size
            entries.append(ManifestEntry(f"layer{i}.bias", offset, tuple(b.shape)))
            offset += b.size
        return tuple(entries)

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @property
    def size(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases, strict=True))

    def flatten(self) -> np.ndarray:
        """Concatenate every parameter into one contiguous blob, in manifest order."""
        parts = []
        for w, b in zip(self.weights, self.biases, strict=True):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    @classmethod
    def unflatten(cls, manifest: tuple[ManifestEntry, ...], blob: np.ndarray) -> MlpParams:
        expected = sum(entry.size for entry in manifest)
        if blob.ndim != 1 or blob.size != expected:
            raise DimensionError("unflatten", "blob", expected, tuple(blob.shape))
        weights, biases = [], []
        for entry in manifest:
            array = blob[entry.offset : entry.offset + entry.size].reshape(entry.shape).copy()
            if entry.name.endswith(".weight"):
                weights.append(array)
            else:
                biases.append(array)
        return cls(weights=weights, biases=biases)

    def copy(self) -> MlpParams:
        return MlpParams(weights=[w.copy() for w in self.weights], biases=[b.copy() for b in self.biases])

    def zeros_like(self) -> MlpParams:
        return MlpParams(
            weights=[np.zeros_like(w) for w in self.weights],
            biases=[np.zeros_like(b) for b in self.biases],
        )

    def checksum(self) -> str:
        return hashlib.sha224(np.ascontiguousarray(self.flatten()).tobytes()).hexdigest()

    def is_finite(self) -> bool:
        return all(np.isfinite(w).all() and np.isfinite(b).all() for w, b in zip(self.weights, self.biases, strict=True))


def init_params(spec: MlpSpec) -> MlpParams:
    """Scaled-uniform fan-in initialisation: every entry ~ U(-a, a), a = sqrt(1 / fan_in)."""
    rng = np.random.default_rng(spec.init_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:], strict=True):
        bound = np.sqrt(1.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(spec.np_dtype))
        biases.append(rng.uniform(-bound, bound, size=(fan_out,)).astype(spec.np_dtype))
    return MlpParams(weights=weights, biases=biases)


def _activate(activation: Activation, z: np.ndarray, slope: float) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return z
    if activation is Activation.RELU:
        return np.maximum(z, 0)
    if activation is Activation.LEAKY_RELU:
        return np.where(z > 0, z, slope * z).astype(z.dtype, copy=False)
    if activation is Activation.TANH:
        return np.tanh(z)
    # sigmoid(z) = exp(-log(1 + exp(-z)))
    return np.exp(-np.logaddexp(0, -z)).astype(z.dtype, copy=False)


def _activation_derivative(activation: Activation, z: np.ndarray, a: np.ndarray, slope: float) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return np.ones_like(z)
    if activation is Activation.RELU:
        return (z > 0).astype(z.dtype)
    if activation is Activation.LEAKY_RELU:
        return np.where(z > 0, 1, slope).astype(z.dtype)
    if activation is Activation.TANH:
        return 1 - a * a
    return a * (1 - a)


@dataclasses.dataclass(frozen=True)
class Tape:
    """Everything mlp_backward needs: the weights used plus each layer's input and pre-activation."""

    spec: MlpSpec
    params: MlpParams
    weights: tuple[np.ndarray, ...]
    layer_inputs: tuple[np.ndarray, ...]
    pre_activations: tuple[np.ndarray, ...]
    outputs: tuple[np.ndarray, ...]

    @property
    def batch_size(self) -> int:
        return self.layer_inputs[0].shape[0]

    @property
    def output(self) -> np.ndarray:
        return self.outputs[-1]


def _check_params(operation: str, spec: MlpSpec, params: MlpParams) -> None:
    if len(params.weights) != spec.n_layers or len(params.biases) != spec.n_layers:
        raise DimensionError(operation, "layer count", spec.n_layers, len(params.weights))
    for i, (fan_in, fan_out) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:], strict=True)):
        if params.weights[i].shape != (fan_in, fan_out):
            raise DimensionError(operation, f"layer{i}.weight", (fan_in, fan_out), params.weights[i].shape)
        if params.biases[i].shape != (fan_out,):
            raise DimensionError(operation, f"layer{i}.bias", (fan_out,), params.biases[i].shape)


def mlp_forward(spec: MlpSpec, params: MlpParams, batch: DenseTensor) -> tuple[DenseTensor, Tape]:
    _check_params("mlp_forward", spec, params)
    x = np.asarray(batch, dtype=spec.np_dtype)
    if x.ndim != 2 or x.shape[1] != spec.input_width:
        raise DimensionError("mlp_forward", "layer0 input", spec.input_width, tuple(x.shape))

    layer_inputs, pre_activations, outputs = [], [], []
    for w, b, activation in zip(params.weights, params.biases, spec.activations, strict=True):
        layer_inputs.append(x)
        z = x @ w + b
        x = _activate(activation, z, spec.leaky_slope)
        pre_activations.append(z)
        outputs.append(x)

    tape = Tape(
        spec=spec,
        params=params,
        weights=tuple(params.weights),
        layer_inputs=tuple(layer_inputs),
        pre_activations=tuple(pre_activations),
        outputs=tuple(outputs),
    )
    return x, tape


def mlp_backward(
    tape: Tape,
    grad_output: DenseTensor,
    through_output_activation: bool = True,
) -> tuple[MlpParams, DenseTensor]:
    """
    Backpropagate grad_output through the recorded forward pass.

    With through_output_activation=False, grad_output is taken to be the
    gradient with respect to the last layer's pre-activation (used for a
    sigmoid output paired with a cross-entropy loss given in logit space).
    """
    if not isinstance(tape, Tape) or len(tape.weights) != tape.spec.n_layers:
        raise ContractError("mlp_backward", "tape does not come from mlp_forward")
    spec = tape.spec
    if tape.params.superseded:
        raise ContractError("mlp_backward", "stale tape: its parameters were updated after the forward pass")
    grad = np.asarray(grad_output, dtype=spec.np_dtype)
    if grad.shape != tape.output.shape:
        raise ContractError(
            "mlp_backward",
            "stale or mismatched tape: gradient shape differs from the recorded output",
            details={"expected": tape.output.shape, "actual": grad.shape},
        )

    weight_grads: list[np.ndarray] = [None] * spec.n_layers  # type: ignore[list-item]
    bias_grads: list[np.ndarray] = [None] * spec.n_layers  # type: ignore[list-item]
    for i in reversed(range(spec.n_layers)):
        if i == spec.n_layers - 1 and not through_output_activation:
            dz = grad
        else:
            dz = grad * _activation_derivative(
                spec.activations[i], tape.pre_activations[i], tape.outputs[i], spec.leaky_slope
            )
        weight_grads[i] = tape.layer_inputs[i].T @ dz
        bias_grads[i] = dz.sum(axis=0)
        grad = dz @ tape.weights[i].T

    return MlpParams(weights=weight_grads, biases=bias_grads), grad
