"""
Application configuration
"""
from typing import List, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings, read from QSCDC_* environment variables or .env"""

    model_config = SettingsConfigDict(
        env_prefix="QSCDC_",
        env_file=".env",
        case_sensitive=False,
    )

    # Application
    app_name: str = "QSCDC Simulator"
    app_version: str = "1.0.0"
    debug: bool = False

    # Server
    host: str = "127.0.0.1"
    port: int = 8000
    cors_origins: List[str] = ["http://localhost:3000", "http://127.0.0.1:3000"]

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = "logs/qscdc.log"
    log_format: str = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"

    # Harness
    report_dir: str = "reports"
    max_workers: int = 4
    sweep_reps: int = 1000
    mc_progress: bool = True


# Global settings instance
settings = Settings()
