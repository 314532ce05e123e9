from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import AliasChoices, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Project central config.
    Each variable can be overriden by '.env' file
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # App
    APP_NAME: str = "okspec"
    APP_ENV: Literal["dev", "test", "prod"] = Field(
        default="dev",
        validation_alias=AliasChoices("APP_ENV", "ENV"),
    )

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: Literal["text", "json"] = "text"
    LOG_JSON_INCLUDE_EXC_INFO: bool = False

    # Central dir for run bundles
    OUTPUT_DIR: str = "./runs"

    # Parallelism cap, also read from OKSPEC_THREADS
    THREADS: int = Field(
        default=1,
        validation_alias=AliasChoices("THREADS", "OKSPEC_THREADS"),
    )

    # Hermitian pairs
    HERMITIAN_REL_TOL: float = 1e-12
    HN_GAP_REL_TOL: float = 1e-8

    # Ellipsoid fitting
    MVEE_TOL: float = 1e-7
    MVEE_MAX_ITER: int = 100_000
    DESIGN_TOL: float = 1e-3
    DESIGN_MAX_ITER: int = 20_000
    DUAL_SAMPLES_PER_DIM: int = 8
    AUDIT_DIRECTIONS: int = 1000
    AUDIT_REL_TOL: float = 1e-9
    COMPLEX_ANGLES: int = 16
    MC_SAMPLES: int = 1_000_000

    # Ultrametric probes
    ULTRA_PROBES: int = 1000

    # Linear series grids
    P1_CHART_RADIUS: float = 1.2
    GRID_RADIAL: int = 32
    GRID_ANGULAR: int = 64
    QUAD_RADIAL: int = 48
    QUAD_ANGULAR: int = 96
    P2_GRID_CAP: int = 64
    P2_QUAD_RADIAL: int = 12
    P2_QUAD_ANGULAR: int = 24
    REFINE_REL_TOL: float = 1e-3
    SUP_POLISH_STEPS: int = 4
    DESIGN_POINTS: int = 4096
    GRAM_CHUNK: int = 8192
    L2_RESOLUTION_TOL: float = 1e-6
    CHART_OVERLAP_TOL: float = 1e-6

    # Okounkov sampling
    N_MAX_D1: int = 200
    N_MAX_D2: int = 60

    # Limit laws
    CONVERGENCE_REL_TOL: float = 5e-2
    A_GRID_POINTS: int = 64

    DEFAULT_SEED: int = 0

    @model_validator(mode="after")
    def _validate_runtime_constraints(self) -> Settings:
        for name in (
            "HERMITIAN_REL_TOL",
            "HN_GAP_REL_TOL",
            "MVEE_TOL",
            "DESIGN_TOL",
            "AUDIT_REL_TOL",
            "REFINE_REL_TOL",
            "L2_RESOLUTION_TOL",
            "CHART_OVERLAP_TOL",
            "CONVERGENCE_REL_TOL",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.THREADS < 1:
            raise ValueError("THREADS must be at least 1")
        if self.P1_CHART_RADIUS <= 1.0:
            raise ValueError("P1_CHART_RADIUS must exceed 1 so that the charts overlap")
        if self.MVEE_MAX_ITER < 1 or self.DESIGN_MAX_ITER < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.DESIGN_POINTS < 1 or self.GRAM_CHUNK < 1:
            raise ValueError("DESIGN_POINTS and GRAM_CHUNK must be at least 1")
        if self.A_GRID_POINTS < 2:
            raise ValueError("A_GRID_POINTS must be at least 2")
        return self


settings = Settings()


def output_root() -> Path:
    return Path(settings.OUTPUT_DIR)
