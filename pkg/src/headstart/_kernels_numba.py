"""Numba-compiled training kernels.

Same contract as ``_kernels_numpy``; explicit loops compiled with
``@njit(cache=True)``.  No ``fastmath`` and no ``parallel`` so results stay
deterministic and bit-stable run to run; summation order differs from the
BLAS-backed numpy path, so cross-backend agreement is close but not bitwise.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def logits_batch(weights, bias, x):
    n, dim = x.shape
    n_classes = weights.shape[0]
    out = np.empty((n, n_classes), dtype=np.float64)
    for s in range(n):
        for i in range(n_classes):
            acc = bias[i]
            for d in range(dim):
                acc += weights[i, d] * x[s, d]
            out[s, i] = acc
    return out


@njit(cache=True)
def ce_grad_batch(weights, bias, x, y):
    n, dim = x.shape
    n_classes = weights.shape[0]
    grad_w = np.zeros((n_classes, dim), dtype=np.float64)
    grad_b = np.zeros(n_classes, dtype=np.float64)
    z = np.empty(n_classes, dtype=np.float64)
    loss = 0.0
    for s in range(n):
        for i in range(n_classes):
            acc = bias[i]
            for d in range(dim):
                acc += weights[i, d] * x[s, d]
            z[i] = acc
        zmax = z[0]
        for i in range(1, n_classes):
            if z[i] > zmax:
                zmax = z[i]
        denom = 0.0
        for i in range(n_classes):
            denom += np.exp(z[i] - zmax)
        label = y[s]
        loss -= z[label] - zmax - np.log(denom)
        for i in range(n_classes):
            g = np.exp(z[i] - zmax) / denom
            if i == label:
                g -= 1.0
            grad_b[i] += g
            for d in range(dim):
                grad_w[i, d] += g * x[s, d]
    inv = 1.0 / n
    for i in range(n_classes):
        grad_b[i] *= inv
        for d in range(dim):
            grad_w[i, d] *= inv
    return grad_w, grad_b, loss * inv


@njit(cache=True)
def adam_update(
    weights, bias, m_w, v_w, m_b, v_b, grad_w, grad_b, lr, beta1, beta2, epsilon, step
):
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    n_classes, dim = weights.shape
    for i in range(n_classes):
        for d in range(dim):
            g = grad_w[i, d]
            m = beta1 * m_w[i, d] + (1.0 - beta1) * g
            v = beta2 * v_w[i, d] + (1.0 - beta2) * (g * g)
            m_w[i, d] = m
            v_w[i, d] = v
            weights[i, d] -= lr * (m / bc1) / (np.sqrt(v / bc2) + epsilon)
        g = grad_b[i]
        m = beta1 * m_b[i] + (1.0 - beta1) * g
        v = beta2 * v_b[i] + (1.0 - beta2) * (g * g)
        m_b[i] = m
        v_b[i] = v
        bias[i] -= lr * (m / bc1) / (np.sqrt(v / bc2) + epsilon)
