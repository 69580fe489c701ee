"""Application configuration: one JSON file, env-var overrides (MATCHFUSE_*)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .model import DomainError

ENV_PREFIX = "MATCHFUSE_"


@dataclass
class AppConfig:
    data_dir: str = "data"
    k: int = 3
    brand_sim: float = 0.85
    dist_threshold: float = 0.2
    band_low: float = 0.75
    band_high: float = 0.95
    judgments_per_row: int = 3
    p_model: float = 0.285  # assumed input precision for the stats endpoint
    host: str = "127.0.0.1"
    port: int = 8000
    seed: int = 0
    experiment_mode: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.brand_sim <= 1.0:
            raise DomainError(f"brand_sim must be in [0, 1], got {self.brand_sim}")
        if not 0.0 <= self.dist_threshold <= 2.0:
            raise DomainError(f"dist_threshold must be in [0, 2], got {self.dist_threshold}")
        if not 0.0 <= self.band_low <= self.band_high <= 1.0:
            raise DomainError(
                f"policy band must satisfy 0 <= low <= high <= 1, "
                f"got low={self.band_low} high={self.band_high}")
        if self.judgments_per_row < 1:
            raise DomainError("judgments_per_row must be >= 1")
        if not 0.0 < self.p_model <= 1.0:
            raise DomainError(f"p_model must be in (0, 1], got {self.p_model}")


def load_config(path=None) -> AppConfig:
    """JSON file values, then MATCHFUSE_<FIELD> environment overrides."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for f in fields(AppConfig):
        env = os.environ.get(ENV_PREFIX + f.name.upper())
        if env is not None:
            if f.type in ("int", int):
                values[f.name] = int(env)
            elif f.type in ("float", float):
                values[f.name] = float(env)
            elif f.type in ("bool", bool):
                values[f.name] = env.lower() in ("1", "true", "yes")
            else:
                values[f.name] = env
    known = {f.name for f in fields(AppConfig)}
    unknown = set(values) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    return AppConfig(**values)


def ensure_data_dir(config: AppConfig) -> Path:
    path = Path(config.data_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path
