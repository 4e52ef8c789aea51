from __future__ import annotations

import numpy as np

from .layers import Parameter


def adam_step(p: Parameter, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> Parameter:
    """Bias-corrected Adam update, in place."""
    p.step_count += 1
    t = p.step_count
    g = p.grad
    p.m *= beta1
    p.m += (1 - beta1) * g
    p.v *= beta2
    p.v += (1 - beta2) * g * g
    m_hat = p.m / (1 - beta1**t)
    v_hat = p.v / (1 - beta2**t)
    p.value -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.value.dtype, copy=False)
    return p


class Adam:
    def __init__(self, params: dict[str, Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self):
        for p in self.params.values():
            adam_step(p, self.lr, self.beta1, self.beta2, self.eps)
