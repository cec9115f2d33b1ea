"""Configuration loading for Balancibility.

Numeric defaults live in config/config.yaml. Library functions never read this
module; only the CLI layer does, and passes values through as keyword arguments.
"""

import os
import logging
from functools import lru_cache
from pathlib import Path
from typing import List, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "config.yaml"


class SettingsException(Exception):
    """Raised when the configuration file cannot be used."""
    pass


class PowerFlowSettings(BaseModel):
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(500, ge=1)
    blowup: float = Field(10.0, gt=1)


class SolvabilitySettings(BaseModel):
    delta_clamp: float = Field(1e-14, ge=0)


class RobustSettings(BaseModel):
    lgr_delta: float = Field(0.5, gt=0)
    lgr_restarts: int = Field(4, ge=1)
    lgr_max_iter: int = Field(400, ge=1)
    psd_tol: float = Field(1e-8, ge=0)
    pg_tol: float = Field(1e-10, gt=0)
    pg_max_iter: int = Field(100000, ge=1)
    polytope_m: List[int] = Field(default_factory=lambda: [2, 4, 8, 16, 32])


class SamplingSettings(BaseModel):
    samples: int = Field(500000, ge=1)
    batch_size: int = Field(65536, ge=1)
    seed: int = 7


class BisectionSettings(BaseModel):
    eps_lo: float = Field(1e-4, gt=0, lt=1)
    eps_hi: float = Field(1 - 1e-4, gt=0, lt=1)
    tol: float = Field(1e-4, gt=0)
    max_iter: int = Field(40, ge=1)
    grid_points: int = Field(9, ge=2)


class CliSettings(BaseModel):
    threads: int = Field(1, ge=1)
    format: str = "csv"


class Settings(BaseModel):
    """Validated view of config.yaml plus environment overrides."""

    powerflow: PowerFlowSettings = Field(default_factory=PowerFlowSettings)
    solvability: SolvabilitySettings = Field(default_factory=SolvabilitySettings)
    robust: RobustSettings = Field(default_factory=RobustSettings)
    sampling: SamplingSettings = Field(default_factory=SamplingSettings)
    bisection: BisectionSettings = Field(default_factory=BisectionSettings)
    cli: CliSettings = Field(default_factory=CliSettings)


def load_settings(path: Optional[Path] = None) -> Settings:
    """Read settings from a YAML file and apply environment overrides.

    Args:
        path: Config file; falls back to BALANCIBILITY_CONFIG, then config/config.yaml

    Returns:
        Settings instance. A missing file yields the built-in defaults.

    Raises:
        SettingsException: If the file is not valid YAML or fails validation
    """
    if path is None:
        path = Path(os.getenv('BALANCIBILITY_CONFIG', str(DEFAULT_CONFIG_PATH)))

    raw = {}
    if path.exists():
        try:
            with open(path, 'r', encoding='utf-8') as f:
                raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise SettingsException(f"Invalid YAML in {path}: {e}") from e
        logger.debug(f"Loaded configuration from {path}")
    else:
        logger.debug(f"No configuration file at {path}, using defaults")

    # Environment overrides
    threads = os.getenv('BALANCIBILITY_THREADS')
    if threads:
        raw.setdefault('cli', {})['threads'] = threads
    seed = os.getenv('BALANCIBILITY_SEED')
    if seed:
        raw.setdefault('sampling', {})['seed'] = seed

    try:
        return Settings.model_validate(raw)
    except ValidationError as e:
        raise SettingsException(f"Invalid configuration in {path}: {e}") from e


@lru_cache()
def get_settings() -> Settings:
    """Get the process-wide settings (cached)."""
    return load_settings()
