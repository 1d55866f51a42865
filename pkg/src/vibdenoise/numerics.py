"""Dense float64 kernels shared by the transformer and the trainer.

Row-vector convention throughout: an affine map is ``x @ W + b``. Every
kernel accepts leading batch axes and works on the last one (or last two
for matrix products).
"""

import numpy as np

from .exceptions import NonFiniteInput, ShapeMismatch


def as_matrix(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.ndim < 1 or b.ndim < 1 or a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return np.matmul(a, b)


def softmax_rows(m) -> np.ndarray:
    m = as_matrix(m)
    e = np.exp(m - m.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def layer_norm(x, gamma, beta, eps: float):
    """Normalize over the last axis with population variance.

    Returns ``(y, x_hat, inv_std)``; the last two are what the backward pass needs.
    """
    x = as_matrix(x)
    gamma, beta = as_matrix(gamma).reshape(-1), as_matrix(beta).reshape(-1)
    if not (x.shape[-1] == gamma.size == beta.size):
        raise ShapeMismatch(f"layer_norm over width {x.shape[-1]} with gamma {gamma.size}, beta {beta.size}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    centred = x - x.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centred * centred).mean(axis=-1, keepdims=True) + eps)
    x_hat = centred * inv_std
    return gamma * x_hat + beta, x_hat, inv_std


def layer_norm_backward(dy, x_hat, inv_std, gamma):
    """Return ``(dx, dgamma, dbeta)``; parameter gradients are summed over leading axes."""
    gamma = gamma.reshape(-1)
    width = x_hat.shape[-1]
    lead = tuple(range(dy.ndim - 1))
    dgamma = (dy * x_hat).sum(axis=lead)
    dbeta = dy.sum(axis=lead)
    dxh = dy * gamma
    dx = inv_std * (
        dxh
        - dxh.sum(axis=-1, keepdims=True) / width
        - x_hat * (dxh * x_hat).sum(axis=-1, keepdims=True) / width
    )
    return dx, dgamma, dbeta


def relu(x) -> np.ndarray:
    return np.maximum(as_matrix(x), 0.0)


def relu_grad(pre) -> np.ndarray:
    # subgradient 0 at 0
    return (pre > 0).astype(np.float64)


def affine(x, w, b) -> np.ndarray:
    w = as_matrix(w)
    b = as_matrix(b).reshape(-1)
    if b.size != w.shape[-1]:
        raise ShapeMismatch(f"bias of width {b.size} for map with {w.shape[-1]} outputs")
    return matmul(x, w) + b


def check_finite(a, what="array"):
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(f"{what} contains NaN or Inf")
    return a
