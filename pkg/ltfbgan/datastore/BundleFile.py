"""
Multi-sample bundle files.

Layout (little-endian)::

    magic         b"LBDS"
    u32           format version
    u32           sample_count
    u32 x 7       ModalityDims (input, latent, scalar, views, channels, h, w)
    payload       sample_count records of fixed stride; each record is
                  input_dim + scalar_dim + views*channels*h*w float32 values

A directory of bundles carries a ``bundles.json`` index listing every file,
its sample count and the global id of its first sample.
"""

from __future__ import annotations

import bisect
import dataclasses
import itertools
import json
import struct
from collections.abc import Iterable
from pathlib import Path
from typing import BinaryIO

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError
from ltfbgan.DataStoreError import BundleError
from ltfbgan.surrogate.ModalityDims import ModalityDims
from ltfbgan.synthdata.generator import SampleRecord

logger = structlog.getLogger(__name__)

BUNDLE_MAGIC = b"LBDS"
BUNDLE_VERSION = 1
INDEX_FILE_NAME = "bundles.json"
_HEADER = struct.Struct("<4sII7I")
_RECORD_DTYPE = np.dtype("<f4")


def record_stride(dims: ModalityDims) -> int:
    return dims.record_floats * _RECORD_DTYPE.itemsize


def bundle_file_name(file_id: int) -> str:
    return f"bundle_{file_id:05d}.lbds"


@dataclasses.dataclass(frozen=True)
class BundleFile:
    path: Path
    file_id: int
    first_sample_id: int
    sample_count: int

    @property
    def sample_ids(self) -> range:
        return range(self.first_sample_id, self.first_sample_id + self.sample_count)


@dataclasses.dataclass(frozen=True)
class BundleCatalog:
    """Index of a bundle directory: which file holds which global sample id."""

    directory: Path
    dims: ModalityDims
    files: tuple[BundleFile, ...]

    @property
    def total_samples(self) -> int:
        return sum(f.sample_count for f in self.files)

    @property
    def record_nbytes(self) -> int:
        return record_stride(self.dims)

    def locate(self, sample_id: int) -> tuple[BundleFile, int]:
        """Return the file holding sample_id and the record offset inside it."""
        if not 0 <= sample_id < self.total_samples:
            raise ContractError("locate", f"sample {sample_id} is not in the catalog")
        firsts = [f.first_sample_id for f in self.files]
        bundle = self.files[bisect.bisect_right(firsts, sample_id) - 1]
        return bundle, sample_id - bundle.first_sample_id

    @classmethod
    def load(cls, directory: Path, dims: ModalityDims | None = None) -> BundleCatalog:
        directory = Path(directory)
        index_path = directory / INDEX_FILE_NAME
        try:
            index = json.loads(index_path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise BundleError(index_path, f"cannot read bundle index: {e}", original_exception=e) from e

        catalog_dims = ModalityDims(**index["dims"])
        if dims is not None and dims != catalog_dims:
            raise BundleError(index_path, f"bundle dims {catalog_dims} differ from configured dims {dims}")
        files = tuple(
            BundleFile(
                path=directory / entry["file"],
                file_id=entry["file_id"],
                first_sample_id=entry["first_sample_id"],
                sample_count=entry["sample_count"],
            )
            for entry in index["files"]
        )
        return cls(directory=directory, dims=catalog_dims, files=files)


def _write_bundle(path: Path, records: list[SampleRecord], dims: ModalityDims) -> None:
    tmp_path = path.with_name(path.name + ".tmp")
    try:
        with tmp_path.open("wb") as f:
            f.write(_HEADER.pack(BUNDLE_MAGIC, BUNDLE_VERSION, len(records), *dims.as_tuple()))
            for record in records:
                row = record.to_row()
                if row.size != dims.record_floats:
                    raise ContractError("write_bundles", f"record has {row.size} values, expected {dims.record_floats}")
                f.write(row.astype(_RECORD_DTYPE, copy=False).tobytes())
        tmp_path.replace(path)
    except OSError as e:
        tmp_path.unlink(missing_ok=True)
        raise BundleError(path, f"cannot write bundle: {e}", original_exception=e) from e


def write_bundles(
    dataset: Iterable[SampleRecord],
    samples_per_file: int,
    out_dir: Path,
    dims: ModalityDims | None = None,
) -> list[Path]:
    """Write records in the given order into ceil(N / samples_per_file) bundle files."""
    if samples_per_file < 1:
        raise ContractError("write_bundles", f"samples_per_file must be >= 1, got {samples_per_file}")
    dims = dims or ModalityDims()
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise BundleError(out_dir, f"cannot create output directory: {e}", original_exception=e) from e

    iterator = iter(dataset)
    paths: list[Path] = []
    entries = []
    first_sample_id = 0
    for file_id in itertools.count():
        chunk = list(itertools.islice(iterator, samples_per_file))
        if not chunk:
            break
        path = out_dir / bundle_file_name(file_id)
        _write_bundle(path, chunk, dims)
        paths.append(path)
        entries.append(
            {
                "file": path.name,
                "file_id": file_id,
                "first_sample_id": first_sample_id,
                "sample_count": len(chunk),
            }
        )
        first_sample_id += len(chunk)
        logger.debug("Bundle written", path=str(path), samples=len(chunk))

    if not paths:
        raise ContractError("write_bundles", "dataset is empty")

    index_path = out_dir / INDEX_FILE_NAME
    tmp_index = index_path.with_name(index_path.name + ".tmp")
    try:
        tmp_index.write_text(json.dumps({"dims": dims.to_dict(), "files": entries}, indent=2))
        tmp_index.replace(index_path)
    except OSError as e:
        tmp_index.unlink(missing_ok=True)
        raise BundleError(index_path, f"cannot write bundle index: {e}", original_exception=e) from e

    logger.info("Bundles written", files=len(paths), samples=first_sample_id, out_dir=str(out_dir))
    return paths


class BundleReader:
    """
    One open bundle file. Opening validates the header against the expected
    dims and the file size against the declared sample count.
    """

    def __init__(self, bundle: BundleFile, dims: ModalityDims):
        self.bundle = bundle
        self.dims = dims
        self.stride = record_stride(dims)
        self.bytes_read = 0
        self._file: BinaryIO | None = None

    def __enter__(self) -> BundleReader:
        path = self.bundle.path
        try:
            self._file = path.open("rb")
            header = self._file.read(_HEADER.size)
            size = path.stat().st_size
        except OSError as e:
            self.close()
            raise BundleError(path, f"cannot open bundle: {e}", self.bundle.file_id, e) from e
        self.bytes_read += len(header)

        if len(header) != _HEADER.size:
            self.close()
            raise BundleError(path, "truncated header", self.bundle.file_id)
        magic, version, sample_count, *dims = _HEADER.unpack(header)
        problem = None
        if magic != BUNDLE_MAGIC:
            problem = f"bad magic {magic!r}"
        elif version != BUNDLE_VERSION:
            problem = f"unsupported version {version}"
        elif tuple(dims) != self.dims.as_tuple():
            problem = f"header dims {tuple(dims)} differ from {self.dims.as_tuple()}"
        elif sample_count != self.bundle.sample_count:
            problem = f"header declares {sample_count} samples, index declares {self.bundle.sample_count}"
        elif size != _HEADER.size + sample_count * self.stride:
            problem = f"payload is {size - _HEADER.size} bytes, expected {sample_count * self.stride}"
        if problem:
            self.close()
            raise BundleError(path, problem, self.bundle.file_id)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def read_record(self, offset: int) -> SampleRecord:
        if self._file is None:
            raise ContractError("read_record", "bundle is not open")
        if not 0 <= offset < self.bundle.sample_count:
            raise ContractError("read_record", f"offset {offset} outside {self.bundle.path}")
        try:
            self._file.seek(_HEADER.size + offset * self.stride)
            raw = self._file.read(self.stride)
        except OSError as e:
            raise BundleError(self.bundle.path, f"read failed: {e}", self.bundle.file_id, e) from e
        if len(raw) != self.stride:
            raise BundleError(self.bundle.path, f"short read at record {offset}", self.bundle.file_id)
        self.bytes_read += len(raw)
        row = np.frombuffer(raw, dtype=_RECORD_DTYPE).astype(np.float32)
        return SampleRecord.from_row(self.dims, row)


def read_bundle(bundle: BundleFile, dims: ModalityDims) -> list[SampleRecord]:
    with BundleReader(bundle, dims) as reader:
        return [reader.read_record(i) for i in range(bundle.sample_count)]
