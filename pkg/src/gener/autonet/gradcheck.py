"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import Rng
from .network import Network


@dataclass
class ParamCheck:
    name: str
    checked: int
    max_rel_error: float
    passed: bool
    kink_retries: int = 0


def _relu_masks(network: Network):
    return [layer._mask for layer in network.relu_layers()]


def _same_masks(a, b) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def relative_error(analytic, numeric, floor=1e-6):
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps true zeros from dividing noise."""
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)


def gradient_check(
    network: Network,
    inputs,
    labels,
    tolerance: float = 1e-4,
    h: float = 1e-5,
    max_entries: int | None = 64,
    seed: int = 0,
    kink_retries: int = 3,
) -> dict[str, ParamCheck]:
    """Compare backprop gradients with central differences.

    Runs in train mode (batch statistics) with every dropout mask frozen
    after the first forward pass; those masks come from a stream derived
    from ``seed``, not from the network's own generator.  Tensors larger than ``max_entries`` are
    checked on a random subset of that size that always includes the entry
    with the largest analytic gradient.  Running statistics are restored
    afterwards.

    A probe whose +h or -h pass flips any ReLU activation straddles a kink,
    where the central difference is meaningless; such entries are retried
    with the step divided by 10, up to ``kink_retries`` times.
    """
    params = network.named_parameters()
    if not params:
        return {}
    if network.dtype != np.float64:
        raise ValueError("gradient checks need a float64 network")
    buffers = {k: v.copy() for k, v in network.named_buffers().items()}
    drops = network.dropout_layers()
    saved_rngs = [d.rng for d in drops]
    mask_rng = Rng.derived(seed, 1)
    for d in drops:
        d.frozen = False
        d._mask = None
        d.rng = mask_rng
    network.forward(inputs, train=True)
    for d in drops:
        d.frozen = True
    try:
        network.loss_and_grad(inputs, labels, train=True)
        base_masks = [m.copy() for m in _relu_masks(network)]
        analytic = {k: p.grad.copy() for k, p in params.items()}
        rng = Rng(seed)
        report = {}
        for name, p in params.items():
            flat = p.value.reshape(-1)
            size = flat.size
            if max_entries is None or size <= max_entries:
                idx = np.arange(size)
            else:
                pick = rng.permutation(size)[: max_entries - 1]
                top = int(np.argmax(np.abs(analytic[name]).reshape(-1)))
                idx = np.unique(np.append(pick, top))
            numeric = np.empty(len(idx))
            retries = 0
            for k, i in enumerate(idx):
                old = flat[i]
                step = h
                for attempt in range(kink_retries + 1):
                    flat[i] = old + step
                    up = network.loss(inputs, labels, train=True)
                    smooth = _same_masks(base_masks, _relu_masks(network))
                    flat[i] = old - step
                    down = network.loss(inputs, labels, train=True)
                    smooth = smooth and _same_masks(base_masks, _relu_masks(network))
                    flat[i] = old
                    numeric[k] = (up - down) / (2 * step)
                    if smooth:
                        break
                    retries += 1
                    step /= 10
            err = relative_error(analytic[name].reshape(-1)[idx], numeric)
            worst = float(err.max()) if err.size else 0.0
            report[name] = ParamCheck(name, len(idx), worst, worst < tolerance, retries)
        return report
    finally:
        for d, r in zip(drops, saved_rngs):
            d.frozen = False
            d.rng = r
        for k, buf in network.named_buffers().items():
            buf[...] = buffers[k]
