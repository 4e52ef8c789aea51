"""Stateless forward/backward kernels.

All arrays are numpy arrays; the dtype of the inputs is preserved.
Shapes: dense works on ``(batch, features)``, conv1d on
``(batch, channels, length)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core import DataError, GenerError, TrainingError


class ShapeMismatch(GenerError, ValueError):
    exit_code = 5


class BatchTooSmall(TrainingError, ValueError):
    pass


class InvalidLabel(DataError, ValueError):
    pass


def dense_forward(x, W, b):
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeMismatch(f"dense: x{x.shape} W{W.shape} b{b.shape}")
    return x @ W + b


def dense_backward(grad_out, x, W):
    """Return ``(grad_x, grad_W, grad_b)``."""
    return grad_out @ W.T, x.T @ grad_out, grad_out.sum(axis=0)


def _im2col(x, k):
    # (N, C, L) -> (N*L, C*k) with zero same-padding
    n, c, length = x.shape
    p = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p)))
    win = sliding_window_view(xp, k, axis=2)  # (N, C, L, k)
    return win.transpose(0, 2, 1, 3).reshape(n * length, c * k)


def conv1d_forward(x, K, b):
    """Stride-1 cross-correlation with zero same-padding (odd kernels only)."""
    if x.ndim != 3 or K.ndim != 3 or x.shape[1] != K.shape[1] or b.shape != (K.shape[0],):
        raise ShapeMismatch(f"conv1d: x{x.shape} K{K.shape} b{b.shape}")
    if K.shape[2] % 2 == 0:
        raise ShapeMismatch("conv1d kernel size must be odd for same padding")
    n, _, length = x.shape
    out_ch = K.shape[0]
    cols = _im2col(x, K.shape[2])
    y = cols @ K.reshape(out_ch, -1).T + b
    return y.reshape(n, length, out_ch).transpose(0, 2, 1)


def conv1d_backward(grad_out, x, K):
    """Return ``(grad_x, grad_K, grad_b)``."""
    n, c, length = x.shape
    out_ch, _, k = K.shape
    p = (k - 1) // 2
    g2 = grad_out.transpose(0, 2, 1).reshape(n * length, out_ch)
    cols = _im2col(x, k)
    grad_K = (g2.T @ cols).reshape(K.shape)
    grad_b = grad_out.sum(axis=(0, 2))
    gcols = (g2 @ K.reshape(out_ch, -1)).reshape(n, length, c, k)
    gxp = np.zeros((n, c, length + 2 * p), dtype=x.dtype)
    for j in range(k):
        gxp[:, :, j:j + length] += gcols[:, :, :, j].transpose(0, 2, 1)
    return gxp[:, :, p:p + length], grad_K, grad_b


def _bn_axes(x):
    # per-feature for (N, F), per-channel for (N, C, L)
    return (0,) if x.ndim == 2 else (0, 2)


def _bn_shape(x):
    return (1, -1) if x.ndim == 2 else (1, -1, 1)


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train, momentum=0.9, eps=1e-5):
    """Batch normalization.

    Train mode normalizes with the biased batch variance and updates the
    running statistics in place (``r = momentum*r + (1-momentum)*batch``).
    Returns ``(y, cache)``.
    """
    axes = _bn_axes(x)
    shape = _bn_shape(x)
    if train:
        count = x.size // x.shape[1]
        if x.shape[0] < 2:
            raise BatchTooSmall("batch normalization needs batch >= 2 in train mode")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        running_mean *= momentum
        running_mean += (1 - momentum) * mean
        running_var *= momentum
        running_var += (1 - momentum) * var
    else:
        count = None
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
    y = gamma.reshape(shape) * xhat + beta.reshape(shape)
    return y.astype(x.dtype, copy=False), (xhat, inv_std, count)


def batchnorm_backward(grad_out, gamma, cache):
    """Return ``(grad_x, grad_gamma, grad_beta)``."""
    xhat, inv_std, count = cache
    axes = _bn_axes(grad_out)
    shape = _bn_shape(grad_out)
    grad_gamma = (grad_out * xhat).sum(axis=axes)
    grad_beta = grad_out.sum(axis=axes)
    gxhat = grad_out * gamma.reshape(shape)
    if count is None:
        return gxhat * inv_std.reshape(shape), grad_gamma, grad_beta
    s1 = gxhat.sum(axis=axes).reshape(shape)
    s2 = (gxhat * xhat).sum(axis=axes).reshape(shape)
    grad_x = (inv_std.reshape(shape) / count) * (count * gxhat - s1 - xhat * s2)
    return grad_x, grad_gamma, grad_beta


def dropout_forward(x, rate, train, uniforms=None):
    """Inverted dropout.

    ``uniforms`` holds one ``[0, 1)`` draw per element (C order); an element
    survives when its draw is ``>= rate``.  Returns ``(y, mask)`` where mask
    already carries the ``1/(1-rate)`` scale, or ``None`` when identity.
    """
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not train or rate == 0:
        return x, None
    if uniforms is None:
        raise ValueError("train-mode dropout needs uniforms")
    keep = uniforms.reshape(x.shape) >= rate
    mask = keep.astype(x.dtype) * x.dtype.type(1.0 / (1.0 - rate))
    return x * mask, mask


def dropout_backward(grad_out, mask):
    return grad_out if mask is None else grad_out * mask


def relu_forward(x):
    return np.maximum(x, 0), x > 0


def relu_backward(grad_out, mask):
    return grad_out * mask


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy of a max-shifted softmax; returns ``(loss, grad_logits)``."""
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,) or np.any((labels < 0) | (labels >= k)):
        raise InvalidLabel(f"labels must be class indices in [0, {k})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted[np.arange(n), labels] - log_z
    loss = float(-log_p.mean())
    grad = softmax(logits)
    grad[np.arange(n), labels] -= 1
    return loss, grad / n
