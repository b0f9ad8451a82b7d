"""Pure-numpy training kernels.

Reference implementation of the hot loops; the numba variant in
``_kernels_numba`` computes the same quantities.  All arrays are float64
(int64 for labels) and the Adam update mutates its state arrays in place.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def logits_batch(weights: np.ndarray, bias: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear scores ``x @ W.T + b`` for a batch, shape (n_samples, n_classes)."""
    return x @ weights.T + bias


def ce_grad_batch(
    weights: np.ndarray, bias: np.ndarray, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Mean cross-entropy loss and its gradients for a softmax head.

    Returns (grad_weights, grad_bias, loss).  The softmax is computed with
    the usual max-shift so large logits cannot overflow.
    """
    n = x.shape[0]
    z = x @ weights.T + bias
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    denom = ez.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    log_py = z[rows, y] - zmax[:, 0] - np.log(denom[:, 0])
    loss = float(-log_py.mean())
    g = ez / denom
    g[rows, y] -= 1.0
    g /= n
    grad_w = g.T @ x
    grad_b = g.sum(axis=0)
    return grad_w, grad_b, loss


def adam_update(
    weights: np.ndarray,
    bias: np.ndarray,
    m_w: np.ndarray,
    v_w: np.ndarray,
    m_b: np.ndarray,
    v_b: np.ndarray,
    grad_w: np.ndarray,
    grad_b: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    epsilon: float,
    step: int,
) -> None:
    """One bias-corrected Adam step, applied in place (step counts from 1)."""
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    m_w *= beta1
    m_w += (1.0 - beta1) * grad_w
    v_w *= beta2
    v_w += (1.0 - beta2) * (grad_w * grad_w)
    weights -= lr * (m_w / bc1) / (np.sqrt(v_w / bc2) + epsilon)
    m_b *= beta1
    m_b += (1.0 - beta1) * grad_b
    v_b *= beta2
    v_b += (1.0 - beta2) * (grad_b * grad_b)
    bias -= lr * (m_b / bc1) / (np.sqrt(v_b / bc2) + epsilon)
