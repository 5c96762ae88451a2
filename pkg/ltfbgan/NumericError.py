"""Exceptions for non-finite numbers encountered during training."""

from __future__ import annotations


class NumericError(ArithmeticError):
    """
    Raised when a loss or gradient is not finite.

    The update that produced it is never applied; callers decide whether to
    skip the step or abort.
    """

    def __init__(
        self,
        operation: str,
        error_message: str,
        quantity: str | None = None,
        step: int | None = None,
        trainer_id: int | None = None,
    ):
        self.operation = operation
        self.error_message = error_message
        self.quantity = quantity
        self.step = step
        self.trainer_id = trainer_id
        super().__init__(f"{operation}: {error_message}")

    def get_structured_error(self) -> dict:
        return {
            "operation": self.operation,
            "error_message": self.error_message,
            "quantity": self.quantity,
            "step": self.step,
            "trainer_id": self.trainer_id,
        }


class NumericAbortError(NumericError):
    """Raised by a trainer once skipped steps exceed its abort threshold."""

    def __init__(self, trainer_id: int, step: int, skipped_steps: int, threshold: int):
        self.skipped_steps = skipped_steps
        self.threshold = threshold
        super().__init__(
            operation="train_steps",
            error_message=f"{skipped_steps} steps skipped for non-finite values (threshold {threshold})",
            step=step,
            trainer_id=trainer_id,
        )

    def get_structured_error(self) -> dict:
        return {
            **super().get_structured_error(),
            "skipped_steps": self.skipped_steps,
            "threshold": self.threshold,
        }
