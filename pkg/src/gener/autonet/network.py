"""Layer sequences and the multi-branch network container."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..rng import Rng
from . import functional as F
from .layers import BatchNorm, Conv1d, Dense, Dropout, Layer, Parameter, ReLU, make_layer


class Sequential:
    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)

    def forward(self, x, train):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad


class Network:
    """Parallel branches whose outputs are concatenated and fed to a head.

    ``forward`` takes one input array per branch.  A single branch with a
    head is an ordinary feed-forward stack.  Dropout layers share one random
    stream and draw in forward order (branch by branch, then the head).
    """

    def __init__(self, branches: Sequence[Sequential], head: Sequential, dtype=np.float32):
        self.branches = list(branches)
        self.head = head
        self.dtype = np.dtype(dtype)
        self.meta: dict = {}

    # -- introspection -----------------------------------------------------
    def _named_layers(self):
        for i, branch in enumerate(self.branches):
            for j, layer in enumerate(branch.layers):
                yield f"branch{i}.{j}", layer
        for j, layer in enumerate(self.head.layers):
            yield f"head.{j}", layer

    def named_parameters(self) -> dict[str, Parameter]:
        return {
            f"{prefix}.{name}": p
            for prefix, layer in self._named_layers()
            for name, p in layer.params().items()
        }

    def named_buffers(self) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.{name}": buf
            for prefix, layer in self._named_layers()
            for name, buf in layer.buffers().items()
        }

    def dropout_layers(self) -> list:
        return [layer for _, layer in self._named_layers() if isinstance(layer, Dropout)]

    def relu_layers(self) -> list:
        return [layer for _, layer in self._named_layers() if isinstance(layer, ReLU)]

    def parameter_count(self) -> int:
        return sum(p.value.size for p in self.named_parameters().values())

    def set_rng(self, rng: Rng) -> None:
        for layer in self.dropout_layers():
            layer.rng = rng

    # -- computation -------------------------------------------------------
    def features(self, inputs, train=False):
        if len(inputs) != len(self.branches):
            raise F.ShapeMismatch(f"expected {len(self.branches)} inputs, got {len(inputs)}")
        outs = [b.forward(np.asarray(x, dtype=self.dtype), train) for b, x in zip(self.branches, inputs)]
        self._widths = [o.shape[1] for o in outs]
        return outs[0] if len(outs) == 1 else np.concatenate(outs, axis=1)

    def forward(self, inputs, train=False):
        """Return logits of shape ``(batch, classes)``."""
        return self.head.forward(self.features(inputs, train), train)

    def predict_proba(self, inputs):
        return F.softmax(self.forward(inputs, train=False))

    def backward(self, grad_logits):
        grad = self.head.backward(grad_logits)
        offsets = np.cumsum([0, *self._widths])
        for k, branch in enumerate(self.branches):
            branch.backward(grad[:, offsets[k]:offsets[k + 1]])

    def zero_grad(self):
        for p in self.named_parameters().values():
            p.zero_grad()

    def loss_and_grad(self, inputs, labels, train=True) -> float:
        """Forward, softmax cross-entropy and backward; gradients are overwritten."""
        self.zero_grad()
        logits = self.forward(inputs, train)
        loss, grad = F.softmax_cross_entropy(logits, labels)
        self.backward(grad)
        return loss

    def loss(self, inputs, labels, train=False) -> float:
        return F.softmax_cross_entropy(self.forward(inputs, train), labels)[0]


def init_params(network: Network, seed: int) -> Network:
    """He-normal weights, zero biases, unit/zero batch-norm scale/shift.

    Weights are drawn from one stream seeded with ``seed`` in layer order,
    each tensor as a block of normals in C order scaled by ``sqrt(2/fan_in)``.
    """
    rng = Rng(seed)
    for _, layer in network._named_layers():
        if isinstance(layer, (Dense, Conv1d)):
            std = np.sqrt(2.0 / layer.fan_in)
            w = rng.normal(layer.W.value.size).reshape(layer.W.shape) * std
            layer.W.value[...] = w
            layer.b.value[...] = 0
        elif isinstance(layer, BatchNorm):
            layer.gamma.value[...] = 1
            layer.beta.value[...] = 0
            layer.running_mean[...] = 0
            layer.running_var[...] = 1
    return network


def build_sequential(specs, dtype=np.float32, rng=None) -> Sequential:
    return Sequential([make_layer(s, dtype, rng) for s in specs])
