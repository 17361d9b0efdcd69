"""Configuration management for the apitc workbench.

Settings come from, in decreasing precedence: explicit overrides (command
line flags), a ``key=value`` config file, ``APITC_*`` environment variables
and the defaults below.
"""

import os
from pathlib import Path
from typing import Annotated, Any

from dotenv import dotenv_values
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict

CONFIG_ENV_VAR = "APITC_CONFIG"


class WorkbenchConfig(BaseSettings):
    """Configuration for exploration, simulation and law checking.

    Settings are loaded from environment variables with the APITC_ prefix.
    For example, APITC_MAX_DEPTH sets the max_depth field.

    Attributes:
        max_depth: Maximum number of steps explored from the root.
        max_states: Maximum number of states per transition system.
        universe_extra: Names added to every input universe.
        universe_size: Cap on how many extra names are used.
        fair_window: Steps a deliverable message may wait before its
            delivery is forced.
        seed: Seed for simulation and instance generation.
        log_level: Logging level.
    """

    model_config = SettingsConfigDict(
        env_prefix="APITC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Exploration bounds
    max_depth: Annotated[int, Field(ge=1, description="Maximum exploration depth")] = 6
    max_states: Annotated[int, Field(ge=1, description="Maximum number of states")] = 20000
    universe_extra: Annotated[
        list[str],
        NoDecode,
        Field(description="Extra input names, comma separated"),
    ] = []
    universe_size: Annotated[
        int,
        Field(ge=1, description="Cap on the number of extra input names"),
    ] = 8

    # Simulation
    fair_window: Annotated[int, Field(ge=1, description="Fairness window in steps")] = 64
    seed: int = 0

    # Logging
    log_level: str = "WARNING"

    @field_validator("universe_extra", mode="before")
    @classmethod
    def _split_names(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [n.strip() for n in value.split(",") if n.strip()]
        return value

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()


def get_config() -> WorkbenchConfig:
    """Get the workbench configuration.

    Returns:
        WorkbenchConfig instance populated from environment variables.
    """
    return WorkbenchConfig()


def load_config(path: str | Path | None = None, **overrides: Any) -> WorkbenchConfig:
    """Build the configuration from a config file and explicit overrides.

    Args:
        path: ``key=value`` file; defaults to ``$APITC_CONFIG`` when set.
            Keys may carry the ``APITC_`` prefix.
        **overrides: Field values that win over everything else; ``None``
            values are ignored.

    Raises:
        FileNotFoundError: If the config file does not exist.
        pydantic.ValidationError: If a value is out of range.
    """
    path = path or os.environ.get(CONFIG_ENV_VAR)
    values: dict[str, Any] = {}
    if path:
        file = Path(path)
        if not file.is_file():
            msg = f"config file not found: {file}"
            raise FileNotFoundError(msg)
        for key, value in dotenv_values(file).items():
            if value is None:
                continue
            name = key.lower().removeprefix("apitc_")
            if name in WorkbenchConfig.model_fields:
                values[name] = value
    values |= {k: v for k, v in overrides.items() if v is not None}
    return WorkbenchConfig(**values)
