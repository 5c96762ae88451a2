from __future__ import annotations

import os

import jinja2.ext


class JinjaEnvVar(jinja2.ext.Extension):
    """
    Gives the YAML config file access to environment variables via
    {{ env_var('NAME', 'default') }}.
    """

    def __init__(self, environment: jinja2.Environment):
        super().__init__(environment)
        environment.globals["env_var"] = JinjaEnvVar.env_var

    @staticmethod
    def env_var(env_var: str, default: str | None = None) -> str:
        result = os.environ.get(env_var, default)
        if result is None:
            raise ValueError(f"Could not find environmental variable {env_var} and no default value was provided")
        return result
