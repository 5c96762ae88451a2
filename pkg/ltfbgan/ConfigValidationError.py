from __future__ import annotations


class ConfigValidationError(ValueError):
    """
    Raised when a resolved configuration is invalid.

    Every offending key is collected before raising, so one run of the CLI
    reports all problems at once.
    """

    def __init__(self, config_name: str, problems: dict[str, str]):
        self.config_name = config_name
        self.problems = dict(problems)
        listing = "; ".join(f"{key}: {reason}" for key, reason in sorted(self.problems.items()))
        super().__init__(f"invalid {config_name}: {listing}")

    @property
    def keys(self) -> list[str]:
        return sorted(self.problems)

    def get_structured_error(self) -> dict:
        return {
            "error_type": "ConfigValidationError",
            "config_name": self.config_name,
            "problems": self.problems,
        }
