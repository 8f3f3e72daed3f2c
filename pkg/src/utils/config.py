"""
Process-level settings using Pydantic settings
"""
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Simulator settings read from FEDSPLIT_* environment variables or .env"""

    model_config = SettingsConfigDict(
        env_prefix="FEDSPLIT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "FedSplit Simulator"
    environment: str = "development"
    log_level: str = "INFO"

    # Execution
    threads: int = Field(default=1, ge=1, description="Client-level worker threads")
    eval_batch_size: int = Field(default=512, ge=1, description="Rows per evaluation chunk")

    # Outputs
    output_dir: str = "results"
    record_timing: bool = Field(
        default=False,
        description="Write wall-clock seconds into metrics CSVs (breaks byte-identical re-runs)",
    )

    def effective_threads(self, override: Optional[int] = None) -> int:
        """CLI flag first, then FEDSPLIT_THREADS, then 1"""
        if override is not None:
            return max(1, int(override))
        return self.threads


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
