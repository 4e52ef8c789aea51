"""The two-branch GENER network and its CNN-only ablation."""

from __future__ import annotations

import hashlib
import json
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .autonet import (
    BatchNormSpec,
    Conv1dSpec,
    DenseSpec,
    DropoutSpec,
    FlattenSpec,
    Network,
    ReLUSpec,
    build_sequential,
    init_params,
)
from .core import ConfigError

ARCH_GENER = "gener"
ARCH_CNN = "cnn_only"
N_CLASSES = 2


class ConfigInvalid(ConfigError):
    pass


class GenerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    conv_filters: list[int] = Field(default_factory=lambda: [32, 64, 64])
    conv_kernels: list[int] = Field(default_factory=lambda: [7, 5, 3])
    branch_feature_dim: int = 128
    dense_units: int = 128
    dropout_rate: float = 0.3
    lr: float = 1e-3
    batch_size: int = 64
    L: Optional[int] = None

    @field_validator("conv_filters")
    @classmethod
    def _three_filters(cls, v):
        if len(v) != 3 or any(f < 1 for f in v):
            raise ValueError("conv_filters needs exactly 3 positive integers")
        return v

    @field_validator("conv_kernels")
    @classmethod
    def _three_odd_kernels(cls, v):
        if len(v) != 3 or any(k < 1 or k % 2 == 0 for k in v):
            raise ValueError("conv_kernels needs exactly 3 odd positive integers")
        return v

    @model_validator(mode="after")
    def _ranges(self):
        if self.branch_feature_dim < 1 or self.dense_units < 1:
            raise ValueError("layer widths must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if not self.lr >= 0:
            raise ValueError("lr must be non-negative")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.L is not None and self.L < 1:
            raise ValueError("L must be positive")
        return self

    @classmethod
    def parse(cls, data: dict) -> "GenerConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigInvalid(str(exc)) from None

    def with_L(self, L: int) -> "GenerConfig":
        return self.model_copy(update={"L": L})

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]

    @property
    def fusion_width(self) -> int:
        return self.branch_feature_dim + self.dense_units


def _conv_branch_specs(config: GenerConfig) -> list:
    specs = []
    in_ch = 2
    for filters, kernel in zip(config.conv_filters, config.conv_kernels):
        specs += [
            Conv1dSpec(in_ch, filters, kernel),
            BatchNormSpec(filters),
            ReLUSpec(),
            DropoutSpec(config.dropout_rate),
        ]
        in_ch = filters
    specs += [FlattenSpec(), DenseSpec(in_ch * config.L, config.branch_feature_dim), ReLUSpec()]
    return specs


def _dense_branch_specs(config: GenerConfig) -> list:
    specs = []
    width = config.L
    for _ in range(2):
        specs += [
            DenseSpec(width, config.dense_units),
            BatchNormSpec(config.dense_units),
            ReLUSpec(),
            DropoutSpec(config.dropout_rate),
        ]
        width = config.dense_units
    return specs


def _require_L(config: GenerConfig):
    if config.L is None:
        raise ConfigInvalid("config.L (expression length) must be set before building")


def build_gener(config: GenerConfig, dtype=np.float32, seed: int | None = None) -> Network:
    """Conv branch on the (2, L) pair matrix, dense branch on the element product,
    late fusion by concatenation into a two-class linear layer."""
    _require_L(config)
    branch_a = build_sequential(_conv_branch_specs(config), dtype)
    branch_b = build_sequential(_dense_branch_specs(config), dtype)
    head = build_sequential([DenseSpec(config.fusion_width, N_CLASSES)], dtype)
    net = Network([branch_a, branch_b], head, dtype)
    net.meta = {"architecture": ARCH_GENER, "config": config}
    if seed is not None:
        init_params(net, seed)
    return net


def build_cnn_only(config: GenerConfig, dtype=np.float32, seed: int | None = None) -> Network:
    _require_L(config)
    branch_a = build_sequential(_conv_branch_specs(config), dtype)
    head = build_sequential([DenseSpec(config.branch_feature_dim, N_CLASSES)], dtype)
    net = Network([branch_a], head, dtype)
    net.meta = {"architecture": ARCH_CNN, "config": config}
    if seed is not None:
        init_params(net, seed)
    return net


def build_network(arch: str, config: GenerConfig, dtype=np.float32, seed: int | None = None) -> Network:
    if arch in (ARCH_GENER, "gener"):
        return build_gener(config, dtype, seed)
    if arch in (ARCH_CNN, "cnn"):
        return build_cnn_only(config, dtype, seed)
    raise ConfigInvalid(f"unknown architecture {arch!r}")


def network_inputs(network: Network, stacked: np.ndarray, product: np.ndarray) -> list:
    if network.meta.get("architecture") == ARCH_CNN:
        return [stacked]
    return [stacked, product]
