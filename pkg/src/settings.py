"""
Pydantic settings model for config.json.
Every field has a default so a missing or partial config file still yields a usable run.
"""

import json
import os
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigError


class Tolerances(BaseModel):
    """Numerical tolerances shared by the validity and fitting modules."""
    inequality: float = Field(1e-9, gt=0)
    eigenvalue: float = Field(1e-8, gt=0, description="Scaled by the number of points m")
    quadrature: float = Field(1e-12, gt=0)
    unit_sum: float = Field(1e-9, gt=0, description="Per-lag unit-sum check on curve CSV input")


class ValiditySearch(BaseModel):
    """Search space for Matheron and excursion-set witnesses."""
    max_points: int = Field(8, ge=2)
    random_configurations: int = Field(1000, ge=0)
    collinear_spacings: List[float] = Field(
        default_factory=lambda: [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.75, 0.9],
        description="Fractions of the model range",
    )
    lattice_sizes: List[int] = Field(default_factory=lambda: [3, 4, 5])
    excursion_max_points: int = Field(10, ge=2)
    excursion_random_configurations: int = Field(200, ge=0)
    seed: int = 0

    @field_validator("collinear_spacings")
    @classmethod
    def validate_spacings(cls, v: List[float]) -> List[float]:
        """Spacings are positive fractions of the range."""
        if not v or any(s <= 0 for s in v):
            raise ValueError("collinear_spacings must be a non-empty list of positive fractions")
        return sorted(v)


class SimulationSettings(BaseModel):
    dense_max_cells: int = Field(4096, ge=1)
    max_embedding_factor: int = Field(4, ge=1)


class ShapeSettings(BaseModel):
    fractal_exponent_threshold: float = Field(0.7, gt=0, le=1)
    default_nlags: int = Field(1, ge=1)


class FittingSettings(BaseModel):
    default_kernel: str = "gaussian"
    lscv_grid_size: int = Field(25, ge=1)


class OutputSettings(BaseModel):
    directory: str = "output"


class LoggingSettings(BaseModel):
    level: str = "WARNING"


class SystemRequirements(BaseModel):
    check_on_startup: bool = False


class Settings(BaseModel):
    """Top-level configuration (config.json)."""
    tolerances: Tolerances = Field(default_factory=Tolerances)
    validity_search: ValiditySearch = Field(default_factory=ValiditySearch)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    shape: ShapeSettings = Field(default_factory=ShapeSettings)
    fitting: FittingSettings = Field(default_factory=FittingSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    threads: int = Field(0, ge=0, description="0 = auto; never changes results")
    system_requirements: SystemRequirements = Field(default_factory=SystemRequirements)

    def worker_count(self) -> int:
        """Resolve `threads` (0 = one worker per CPU)."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


def load_settings(path: Optional[str] = None) -> Settings:
    """
    Load settings with precedence environment > config.json > defaults.

    Args:
        path: Explicit config path; falls back to $TRANSIOGRAM_CONFIG, then config.json

    Returns:
        Validated Settings
    """
    load_dotenv()
    path = path or os.getenv("TRANSIOGRAM_CONFIG", "config.json")

    data = {}
    if os.path.exists(path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e

    try:
        settings = Settings.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e

    # Environment overrides
    threads = os.getenv("TRANSIOGRAM_THREADS")
    if threads:
        try:
            settings.threads = max(0, int(threads))
        except ValueError as e:
            raise ConfigError(f"TRANSIOGRAM_THREADS must be an integer, got {threads!r}") from e
    level = os.getenv("TRANSIOGRAM_LOG_LEVEL")
    if level:
        settings.logging.level = level.upper()

    return settings
