"""
Application configuration settings
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-level settings loaded from environment variables
    """
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Project metadata
    PROJECT_NAME: str = "sicmag"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Run defaults, overridden by the experiment config and CLI flags
    DEFAULT_OUTPUT_DIR: str = "out"
    DEFAULT_JOBS: int = 1
    MASTER_SEED: int = 20240501

    # Output
    CSV_SIGNIFICANT_DIGITS: int = 9

    # Solver defaults
    FIT_XTOL: float = 1e-8
    FIT_GTOL: float = 1e-8
    FIT_MAX_ITERATIONS: int = 200

    @property
    def csv_float_format(self) -> str:
        """printf-style float format for CSV emission"""
        return f"%.{self.CSV_SIGNIFICANT_DIGITS}g"


# Create global settings instance
settings = Settings()
