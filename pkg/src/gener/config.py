"""Run configuration documents (JSON)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .core import ConfigError
from .model import GenerConfig
from .preprocess import SplitFractions


class FractionsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train: float = 0.8
    val: float = 0.1
    test: float = 0.1

    def to_fractions(self) -> SplitFractions:
        return SplitFractions(self.train, self.val, self.test)


class DataSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    expression_path: str
    interactions_path: str
    normalization: Literal["standardize", "quantile", "none"] = "standardize"
    negatives: Literal["from_file", "sampled"] = "sampled"
    # sampled negatives per kept positive
    negative_ratio: float = 1.0
    split_fractions: FractionsModel = Field(default_factory=FractionsModel)
    subsample_both: Optional[float] = None
    interactions_header: bool = False
    uppercase_genes: bool = False

    @field_validator("negative_ratio")
    @classmethod
    def _ratio(cls, v):
        if v <= 0:
            raise ValueError("negative_ratio must be positive")
        return v

    @field_validator("subsample_both")
    @classmethod
    def _fraction(cls, v):
        if v is not None and not 0 < v <= 1:
            raise ValueError("subsample_both must lie in (0, 1]")
        return v


class GridSection(BaseModel):
    """Candidate lists; omitted keys keep the model section's value."""

    model_config = ConfigDict(extra="forbid")

    lr: Optional[list[float]] = None
    dropout_rate: Optional[list[float]] = None
    conv_filters: Optional[list[list[int]]] = None
    dense_units: Optional[list[int]] = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: DataSection
    model: dict = Field(default_factory=dict)
    train: dict = Field(default_factory=dict)
    grid: Optional[GridSection] = None
    seed: int = 42

    @field_validator("seed")
    @classmethod
    def _seed(cls, v):
        if not 0 <= v < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        return v

    def gener_config(self) -> GenerConfig:
        return GenerConfig.parse(self.model)


def load_run_config(path) -> RunConfig:
    """Parse a config file; relative data paths resolve against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    base = path.parent
    for key in ("expression_path", "interactions_path"):
        value = Path(getattr(cfg.data, key))
        if not value.is_absolute():
            setattr(cfg.data, key, str(base / value))
    cfg.gener_config()  # validate early
    return cfg


def load_grid(path) -> GridSection:
    try:
        return GridSection.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise ConfigError(f"bad grid file {path}: {exc}") from None
