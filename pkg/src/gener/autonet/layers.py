"""Parameterized layers built on the functional kernels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import functional as F


@dataclass
class Parameter:
    value: np.ndarray
    grad: np.ndarray = field(default=None)
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)
    step_count: int = 0

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.m is None:
            self.m = np.zeros_like(self.value)
        if self.v is None:
            self.v = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad.fill(0)


# -- layer specs ------------------------------------------------------------

@dataclass(frozen=True)
class DenseSpec:
    in_features: int
    out_features: int


@dataclass(frozen=True)
class Conv1dSpec:
    in_channels: int
    out_channels: int
    kernel: int

    def __post_init__(self):
        if self.kernel % 2 == 0 or self.kernel < 1:
            raise F.ShapeMismatch(f"conv kernel {self.kernel} must be odd")


@dataclass(frozen=True)
class BatchNormSpec:
    features: int
    momentum: float = 0.9
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("batchnorm epsilon must be positive")


@dataclass(frozen=True)
class DropoutSpec:
    rate: float

    def __post_init__(self):
        if not 0 <= self.rate < 1:
            raise ValueError(f"dropout rate {self.rate} outside [0, 1)")


@dataclass(frozen=True)
class ReLUSpec:
    pass


@dataclass(frozen=True)
class FlattenSpec:
    pass


# -- layers -----------------------------------------------------------------

class Layer:
    def params(self) -> dict[str, Parameter]:
        return {}

    def buffers(self) -> dict[str, np.ndarray]:
        return {}

    def forward(self, x, train: bool):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, spec: DenseSpec, dtype=np.float32):
        self.spec = spec
        self.W = Parameter(np.zeros((spec.in_features, spec.out_features), dtype=dtype))
        self.b = Parameter(np.zeros(spec.out_features, dtype=dtype))
        self.fan_in = spec.in_features

    def params(self):
        return {"W": self.W, "b": self.b}

    def forward(self, x, train):
        self._x = x
        return F.dense_forward(x, self.W.value, self.b.value)

    def backward(self, grad):
        gx, gW, gb = F.dense_backward(grad, self._x, self.W.value)
        self.W.grad += gW
        self.b.grad += gb
        return gx


class Conv1d(Layer):
    def __init__(self, spec: Conv1dSpec, dtype=np.float32):
        self.spec = spec
        self.W = Parameter(
            np.zeros((spec.out_channels, spec.in_channels, spec.kernel), dtype=dtype)
        )
        self.b = Parameter(np.zeros(spec.out_channels, dtype=dtype))
        self.fan_in = spec.in_channels * spec.kernel

    def params(self):
        return {"W": self.W, "b": self.b}

    def forward(self, x, train):
        self._x = x
        return F.conv1d_forward(x, self.W.value, self.b.value)

    def backward(self, grad):
        gx, gW, gb = F.conv1d_backward(grad, self._x, self.W.value)
        self.W.grad += gW
        self.b.grad += gb
        return gx


class BatchNorm(Layer):
    def __init__(self, spec: BatchNormSpec, dtype=np.float32):
        self.spec = spec
        self.gamma = Parameter(np.ones(spec.features, dtype=dtype))
        self.beta = Parameter(np.zeros(spec.features, dtype=dtype))
        self.running_mean = np.zeros(spec.features, dtype=dtype)
        self.running_var = np.ones(spec.features, dtype=dtype)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, train):
        y, self._cache = F.batchnorm_forward(
            x, self.gamma.value, self.beta.value, self.running_mean, self.running_var,
            train, self.spec.momentum, self.spec.epsilon,
        )
        return y

    def backward(self, grad):
        gx, gg, gb = F.batchnorm_backward(grad, self.gamma.value, self._cache)
        self.gamma.grad += gg
        self.beta.grad += gb
        return gx


class Dropout(Layer):
    """Inverted dropout drawing its mask from a shared :class:`~gener.rng.Rng`.

    With ``frozen`` set, the last train-mode mask is reused instead of drawing
    a new one (needed for finite-difference checks).
    """

    def __init__(self, spec: DropoutSpec, rng=None):
        self.spec = spec
        self.rng = rng
        self.frozen = False
        self._mask = None

    def forward(self, x, train):
        if not train or self.spec.rate == 0:
            self._mask = None
            return x
        if self.frozen and self._mask is not None and self._mask.shape == x.shape:
            return x * self._mask
        y, self._mask = F.dropout_forward(x, self.spec.rate, True, self.rng.uniform(x.size))
        return y

    def backward(self, grad):
        return F.dropout_backward(grad, self._mask)


class ReLU(Layer):
    def forward(self, x, train):
        y, self._mask = F.relu_forward(x)
        return y

    def backward(self, grad):
        return F.relu_backward(grad, self._mask)


class Flatten(Layer):
    def forward(self, x, train):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


def make_layer(spec, dtype=np.float32, rng=None) -> Layer:
    if isinstance(spec, DenseSpec):
        return Dense(spec, dtype)
    if isinstance(spec, Conv1dSpec):
        return Conv1d(spec, dtype)
    if isinstance(spec, BatchNormSpec):
        return BatchNorm(spec, dtype)
    if isinstance(spec, DropoutSpec):
        return Dropout(spec, rng)
    if isinstance(spec, ReLUSpec):
        return ReLU()
    if isinstance(spec, FlattenSpec):
        return Flatten()
    raise TypeError(f"unknown layer spec {spec!r}")
