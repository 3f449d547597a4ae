import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, ContextManager, Literal, Optional

import prefect.logging.configuration
import prefect.settings
from pydantic import Field, PrivateAttr, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class Settings(BaseSettings):
    """Process-wide knobs, read from UOS_* environment variables or a .env file."""

    model_config = SettingsConfigDict(
        env_prefix="UOS_",
        env_file=("" if os.getenv("UOS_TEST_MODE") else ("~/.uosdetect/.env", ".env")),
        extra="ignore",
        validate_assignment=True,
    )

    log_level: LogLevel = Field(default="INFO", description="Level of the uosdetect logger.")
    seed: Optional[int] = Field(
        default=None,
        description="Experiment seed. When set it overrides the seed of a run config.",
    )
    workers: int = Field(
        default=1,
        ge=1,
        description="Number of concurrent Monte-Carlo workers. Never changes results.",
    )
    chunk_size: int = Field(
        default=1000,
        ge=1,
        description="Trials per work item. Chunks are evaluated as one vectorized "
        "batch, so the chunk size is part of the reproducibility key.",
    )
    output_dir: Path = Field(
        default=Path("uos-output"),
        description="Default directory for CSV and SVG outputs.",
    )
    plots: bool = Field(
        default=True,
        description="If True, commands write SVG plots next to their CSV outputs.",
    )

    # Prefect only runs the threaded trial map; its logs stay quiet unless asked
    prefect_log_level: LogLevel = Field(
        default="WARNING",
        description="Level of Prefect's loggers while trials are dispatched.",
        alias="PREFECT_LOGGING_LEVEL",
    )

    _prefect_context: Optional[ContextManager] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _apply_log_levels(self):
        from uosdetect.utilities.logging import setup_logging

        setup_logging(self.log_level)

        if self._prefect_context is not None:
            self._prefect_context.__exit__(None, None, None)
            self._prefect_context = None
        level = prefect.settings.PREFECT_LOGGING_LEVEL
        if level.value() != self.prefect_log_level:
            self._prefect_context = prefect.settings.temporary_settings(
                {level: self.prefect_log_level}
            )
            self._prefect_context.__enter__()
        prefect.logging.configuration.setup_logging()
        return self


settings = Settings()


@contextmanager
def temporary_settings(**overrides: Any):
    """
    Override settings inside a block, restoring the previous values on exit.

        with temporary_settings(workers=4, chunk_size=250):
            run_trials(scenario, gamma_bar)
    """
    unknown = [name for name in overrides if name not in Settings.model_fields]
    if unknown:
        raise AttributeError(f"Unknown settings: {', '.join(unknown)}")
    previous = {name: getattr(settings, name) for name in overrides}
    try:
        for name, value in overrides.items():
            setattr(settings, name, value)
        yield
    finally:
        for name, value in previous.items():
            setattr(settings, name, value)
