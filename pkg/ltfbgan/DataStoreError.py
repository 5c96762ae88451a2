"""Exceptions raised by bundle file access and the in-memory data store."""

from __future__ import annotations

from pathlib import Path


class DataStoreError(OSError):
    """Base class for data store failures."""

    def get_structured_error(self) -> dict:
        return {"error_message": str(self)}


class BundleError(DataStoreError):
    """
    A bundle file is missing, unreadable or does not match its expected layout.
    """

    def __init__(
        self,
        path: Path,
        error_message: str,
        file_id: int | None = None,
        original_exception: Exception | None = None,
    ):
        self.path = Path(path)
        self.file_id = file_id
        self.error_message = error_message
        self.original_exception = original_exception
        file_info = f" (file {file_id})" if file_id is not None else ""
        super().__init__(f"Bundle {self.path}{file_info}: {error_message}")

    def get_structured_error(self) -> dict:
        return {
            "path": self.path.as_posix(),
            "file_id": self.file_id,
            "error_message": self.error_message,
        }


class CapacityError(DataStoreError):
    """The samples assigned to a store do not fit its memory budget."""

    def __init__(self, required_bytes: int, available_bytes: int, trainer_id: int | None = None):
        self.required_bytes = required_bytes
        self.available_bytes = available_bytes
        self.trainer_id = trainer_id
        super().__init__(
            f"Data store needs {required_bytes} bytes but only {available_bytes} bytes are available"
        )

    def get_structured_error(self) -> dict:
        return {
            "required_bytes": self.required_bytes,
            "available_bytes": self.available_bytes,
            "trainer_id": self.trainer_id,
        }


class StoreCorruptionError(DataStoreError):
    """A shard does not hold a sample the ownership map says it owns."""

    def __init__(self, sample_id: int, owner: int, step: int | None = None):
        self.sample_id = sample_id
        self.owner = owner
        self.step = step
        super().__init__(f"Shard {owner} is missing sample {sample_id} it should own")

    def get_structured_error(self) -> dict:
        return {"sample_id": self.sample_id, "owner": self.owner, "step": self.step}
