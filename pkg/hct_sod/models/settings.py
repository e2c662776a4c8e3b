"""
Runtime settings read from the environment (prefix HCT_) and an optional .env file
"""
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class AppSettings(BaseSettings):
    """Process-wide settings; none of them change numerical results"""
    log_dir: Path = Field(default=Path("logs"), description="Directory for hct.log")
    log_level: str = Field(default="INFO", description="Logging level name")
    output_dir: Path = Field(default=Path("runs"), description="Default output directory for CLI runs")
    eval_workers: int = Field(default=4, ge=1, description="Threads used to score images in parallel")

    model_config = SettingsConfigDict(env_prefix="HCT_", env_file=".env", extra="ignore")


def get_settings() -> AppSettings:
    """Build settings from the current environment"""
    return AppSettings()
