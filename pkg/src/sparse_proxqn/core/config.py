from pathlib import Path
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# --- Installed domains (container registration + event handlers) ---
INSTALLED_DOMAINS = ["prox_qn", "training"]

# --- ---- ---- ---- ---- ---- --- ---


BASE_DIR = Path(__file__).resolve().parents[3]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="PROXQN_",
        env_file=BASE_DIR / ".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # --- Installed domains ---
    installed_domains: list[str] = Field(default_factory=lambda: INSTALLED_DOMAINS)

    # --- Logging ---
    log_level: str = Field("INFO")
    log_plain: bool = Field(False)

    # --- Solver defaults ---
    epsilon: float = Field(1e-6, gt=0)
    memory: int = Field(10, ge=1)
    beta: float = Field(0.5, gt=0, lt=1)
    sigma: float = Field(0.01, gt=0, lt=1)
    max_inner: int = Field(10, ge=1)
    max_outer: int = Field(10000, ge=1)
    max_trials: int = Field(40, ge=1)
    cooling_factor: float = Field(10.0, gt=1)
    curvature_floor: float = Field(1e-12, ge=0)

    # --- Runtime ---
    threads: int = Field(1, ge=1)
    seed: int = Field(0)
    output_dir: Path = Field(Path("runs"))


settings = Settings()
