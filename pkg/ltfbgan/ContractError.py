"""Exceptions raised when a caller breaks an operation's preconditions."""

from __future__ import annotations


class ContractError(ValueError):
    """
    Raised when an operation is invoked with arguments that violate its contract.

    Carries the operation name and optional details so the failure can be
    logged as structured data.
    """

    def __init__(self, operation: str, error_message: str, details: dict | None = None):
        self.operation = operation
        self.error_message = error_message
        self.details = details or {}
        super().__init__(f"{operation}: {error_message}")

    def get_structured_error(self) -> dict:
        return {
            "operation": self.operation,
            "error_message": self.error_message,
            **self.details,
        }


class DimensionError(ContractError):
    """Shape mismatch, naming the layer (or tensor) where it was detected."""

    def __init__(
        self,
        operation: str,
        layer: str,
        expected: tuple | int,
        actual: tuple | int,
    ):
        self.layer = layer
        self.expected = expected
        self.actual = actual
        super().__init__(
            operation=operation,
            error_message=f"dimension mismatch at {layer}: expected {expected}, got {actual}",
            details={"layer": layer, "expected": expected, "actual": actual},
        )
