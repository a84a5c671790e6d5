"""Configuration management using Pydantic Settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # App
    log_level: str = "INFO"
    data_dir: str = "./data"

    # Worker pools for dataset generation and evaluation
    num_workers: int = 1

    default_seed: int = 0


# Global settings instance
settings = Settings()
