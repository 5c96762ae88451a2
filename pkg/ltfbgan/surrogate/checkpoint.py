"""
Weight checkpoint file.

Layout (little-endian)::

    magic  b"LTCK"
    u32    format version
    u32    header length in bytes
    bytes  UTF-8 JSON header: dims, loss weights, per-network spec and manifest
    blobs  one flat parameter array per network, in header order, in the network's dtype
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np
import structlog

from ltfbgan.DataStoreError import BundleError
from ltfbgan.nn.adam import AdamHyper, AdamState
from ltfbgan.nn.mlp import ManifestEntry, MlpParams, MlpSpec
from ltfbgan.surrogate.CycleGanModel import NETWORKS, CycleGanModel, LossWeights
from ltfbgan.surrogate.ModalityDims import ModalityDims

logger = structlog.getLogger(__name__)

CHECKPOINT_MAGIC = b"LTCK"
CHECKPOINT_VERSION = 1
_PREAMBLE = struct.Struct("<4sII")


def save_checkpoint(model: CycleGanModel, path: Path, hyper: AdamHyper | None = None) -> Path:
    path = Path(path)
    networks = []
    blobs = []
    for name in NETWORKS:
        params = model.params[name]
        blob = params.flatten().astype(np.dtype(model.specs[name].dtype).newbyteorder("<"), copy=False)
        networks.append(
            {
                "name": name,
                "spec": model.specs[name].to_dict(),
                "manifest": [[e.name, e.offset, list(e.shape)] for e in params.manifest],
                "count": int(blob.size),
            }
        )
        blobs.append(blob)

    header = json.dumps(
        {
            "dims": model.dims.to_dict(),
            "loss_weights": dataclasses.asdict(model.loss_weights),
            "autoencoder_frozen": model.autoencoder_frozen,
            "adam": dataclasses.asdict(hyper or model.optimizers["forward"].hyper),
            "networks": networks,
        },
        sort_keys=True,
    ).encode("utf-8")

    tmp_path = path.with_name(path.name + ".tmp")
    try:
        with tmp_path.open("wb") as f:
            f.write(_PREAMBLE.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header)))
            f.write(header)
            for blob in blobs:
                f.write(blob.tobytes())
        tmp_path.replace(path)
    except OSError as e:
        tmp_path.unlink(missing_ok=True)
        raise BundleError(path, f"cannot write checkpoint: {e}", original_exception=e) from e
    logger.debug("Checkpoint written", path=str(path), networks=len(networks))
    return path


def load_checkpoint(path: Path) -> CycleGanModel:
    """Load a model; optimizer moments start fresh."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise BundleError(path, f"cannot read checkpoint: {e}", original_exception=e) from e

    if len(data) < _PREAMBLE.size:
        raise BundleError(path, "truncated checkpoint preamble")
    magic, version, header_len = _PREAMBLE.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise BundleError(path, f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise BundleError(path, f"unsupported checkpoint version {version}")

    offset = _PREAMBLE.size
    header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    offset += header_len

    specs, params = {}, {}
    for network in header["networks"]:
        spec = MlpSpec(
            layer_widths=tuple(network["spec"]["layer_widths"]),
            activations=tuple(network["spec"]["activations"]),
            init_seed=network["spec"]["init_seed"],
            leaky_slope=network["spec"]["leaky_slope"],
            dtype=network["spec"]["dtype"],
        )
        dtype = np.dtype(spec.dtype).newbyteorder("<")
        nbytes = network["count"] * dtype.itemsize
        if offset + nbytes > len(data):
            raise BundleError(path, f"truncated blob for network {network['name']}")
        blob = np.frombuffer(data, dtype=dtype, count=network["count"], offset=offset).astype(spec.np_dtype)
        offset += nbytes
        manifest = tuple(ManifestEntry(name, off, tuple(shape)) for name, off, shape in network["manifest"])
        specs[network["name"]] = spec
        params[network["name"]] = MlpParams.unflatten(manifest, blob)

    if offset != len(data):
        raise BundleError(path, f"{len(data) - offset} trailing bytes after the last blob")

    hyper = AdamHyper(**header["adam"])
    return CycleGanModel(
        dims=ModalityDims(**header["dims"]),
        specs=specs,
        params=params,
        optimizers={name: AdamState.fresh(p, hyper) for name, p in params.items()},
        loss_weights=LossWeights(**header["loss_weights"]),
        autoencoder_frozen=header["autoencoder_frozen"],
    )
