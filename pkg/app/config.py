from pydantic_settings import BaseSettings
from pathlib import Path
from functools import lru_cache


class Settings(BaseSettings):
    # Logging
    log_level: str = "INFO"

    # Storage paths
    base_dir: Path = Path.cwd()
    output_dir: str = "output"

    # Eigensolver Settings
    validation_cap: int = 8191  # Largest order solved exactly when validating
    bisection_rel_width: float = 1e-16
    max_workers: int = 4  # Concurrent level eigensolves

    # Self-test Settings
    selftest_seed: int = 20190101
    selftest_cases: int = 50

    @property
    def output_path(self) -> Path:
        return self.base_dir / self.output_dir

    class Config:
        env_prefix = "PGRID_"
        env_file = ".env"
        env_file_encoding = "utf-8"


@lru_cache
def get_settings() -> Settings:
    return Settings()
