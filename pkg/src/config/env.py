"""
Environment configuration via pydantic_settings.

This is the SINGLE SOURCE OF TRUTH for all environment variables.
Commands and services import from here; they never read os.environ directly.

Usage:
    from src.config.env import env
    env.LOG_LEVEL
    env.PIPELINE_CONFIG_PATH

Environment switching:
    - APP_ENV is read ONCE here ("development" | "production" | "test").
    - The .env file is loaded automatically when present.
"""

import os

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """
    All environment variables in one place.
    Fields have sensible dev defaults; deployments override via .env.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",  # ignore env vars not declared here
        case_sensitive=False,
    )

    # ── Environment switch ──────────────────────────────────────────────
    # "development" | "production" | "test"
    APP_ENV: str = Field(default="development")

    # ── Logging ─────────────────────────────────────────────────────────
    LOG_LEVEL: str = "INFO"

    # ── Pipeline defaults ───────────────────────────────────────────────
    # Config file used by `segment` / `bench` when --config is omitted.
    PIPELINE_CONFIG_PATH: str = ""

    # 0 → os.cpu_count()
    THREADS: int = 0

    # ── Output ──────────────────────────────────────────────────────────
    RESULTS_INDENT: int = 2

    @field_validator("APP_ENV")
    @classmethod
    def validate_env(cls, v: str) -> str:
        allowed = {"development", "production", "test"}
        if v not in allowed:
            msg = f"APP_ENV must be one of {allowed}, got '{v}'"
            raise ValueError(msg)
        return v

    @field_validator("THREADS")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        if v < 0:
            msg = f"THREADS must be >= 0, got {v}"
            raise ValueError(msg)
        return v

    @property
    def is_production(self) -> bool:
        return self.APP_ENV == "production"

    @property
    def is_development(self) -> bool:
        return self.APP_ENV == "development"

    @property
    def is_test(self) -> bool:
        return self.APP_ENV == "test"

    @property
    def max_threads(self) -> int:
        return self.THREADS or (os.cpu_count() or 1)


# ── Singleton ───────────────────────────────────────────────────────────
# Instantiated once at import time. Everything else reads this.
env = AppSettings()
