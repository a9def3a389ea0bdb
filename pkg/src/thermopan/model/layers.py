"""Network primitives with explicit backward passes.

Activations are ``(N, H, W, C)`` float64 arrays. Each ``*_bwd`` returns the
gradient with respect to the inputs of the matching ``*_fwd``.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

IN_EPS = 1e-5


def he_init(shape: tuple[int, ...], seed=None) -> np.ndarray:
    """Normal(0, sqrt(2 / fan_in)) with fan_in = prod(shape[1:])."""
    if len(shape) < 2:
        raise ValueError(f"cannot infer fan-in from shape {shape}")
    fan_in = int(np.prod(shape[1:]))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def _im2col(x: np.ndarray, k: int, stride: int, pad: int) -> tuple[np.ndarray, int, int]:
    """Rows are output pixels; columns ordered (kernel row, kernel col, channel)."""
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    n, h, w, c = x.shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    if k == 1 and stride == 1:
        return x.reshape(n * ho * wo, c), ho, wo
    cols = np.concatenate([x[:, a:a + stride * (ho - 1) + 1:stride, b:b + stride * (wo - 1) + 1:stride]
                           for a in range(k) for b in range(k)], axis=-1)
    return cols.reshape(n * ho * wo, k * k * c), ho, wo


def _wmat(w: np.ndarray) -> np.ndarray:
    # (O, C, k, k) -> (k*k*C, O) matching the im2col column order
    o = w.shape[0]
    return w.transpose(2, 3, 1, 0).reshape(-1, o)


def conv2d_fwd(x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0,
               bias: Optional[np.ndarray] = None, return_cols: bool = False):
    """Cross-correlation of ``x`` (N, H, W, C) with ``w`` (O, C, k, k), zero padding.

    With ``return_cols`` the im2col matrix is returned too, for reuse by
    :func:`conv2d_bwd`.
    """
    n, c = x.shape[0], x.shape[-1]
    o, wc, k, k2 = w.shape
    if wc != c or k != k2:
        raise ValueError(f"conv shape mismatch: input {x.shape}, weight {w.shape}")
    cols, ho, wo = _im2col(x, k, stride, pad)
    y = cols @ _wmat(w)
    if bias is not None:
        y += bias
    y = y.reshape(n, ho, wo, o)
    return (y, cols) if return_cols else y


def conv2d_bwd(grad_y: np.ndarray, x: np.ndarray, w: np.ndarray, stride: int = 1,
               pad: int = 0, cols: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    n, h, wd, c = x.shape
    o, _, k, _ = w.shape
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    if grad_y.shape != (n, ho, wo, o):
        raise ValueError(f"grad shape {grad_y.shape} does not match output {(n, ho, wo, o)}")
    if cols is None:
        cols, _, _ = _im2col(x, k, stride, pad)
    gy = grad_y.reshape(-1, o)
    grad_w = (cols.T @ gy).reshape(k, k, c, o).transpose(3, 2, 0, 1)

    # input gradient: transposed convolution = dilate, pad, correlate with the flipped kernel
    if stride > 1:
        dil = np.zeros((n, stride * (ho - 1) + 1, stride * (wo - 1) + 1, o))
        dil[:, ::stride, ::stride] = grad_y
    else:
        dil = grad_y
    lo = k - 1 - pad
    extra_h = h + 2 * pad - k - stride * (ho - 1)
    extra_w = wd + 2 * pad - k - stride * (wo - 1)
    dil = np.pad(dil, ((0, 0), (lo, lo + extra_h), (lo, lo + extra_w), (0, 0)))
    w_t = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    grad_x = conv2d_fwd(dil, w_t)
    return grad_x, grad_w


def leaky_relu_fwd(x: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_bwd(grad_y: np.ndarray, x: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return np.where(x > 0, grad_y, slope * grad_y)


def sigmoid_fwd(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid_bwd(grad_y: np.ndarray, y: np.ndarray) -> np.ndarray:
    return grad_y * y * (1.0 - y)


def instance_norm_fwd(x: np.ndarray, scale: np.ndarray, shift: np.ndarray,
                      eps: float = IN_EPS) -> tuple[np.ndarray, tuple]:
    """Per-image, per-channel standardization followed by a learned affine map."""
    mean = x.mean(axis=(1, 2), keepdims=True)
    var = x.var(axis=(1, 2), keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv_std
    y = scale * xhat + shift
    return y, (xhat, inv_std)


def instance_norm_bwd(grad_y: np.ndarray, cache: tuple,
                      scale: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv_std = cache
    grad_scale = (grad_y * xhat).sum(axis=(0, 1, 2))
    grad_shift = grad_y.sum(axis=(0, 1, 2))
    g = grad_y * scale
    grad_x = inv_std * (g - g.mean(axis=(1, 2), keepdims=True)
                        - xhat * (g * xhat).mean(axis=(1, 2), keepdims=True))
    return grad_x, grad_scale, grad_shift


def dropout_fwd(x: np.ndarray, p: float, train: bool,
                rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverted dropout; identity in eval mode or when ``p == 0``."""
    if not train or p == 0.0:
        return x, None
    if rng is None:
        raise ValueError("dropout in train mode needs a random generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def dropout_bwd(grad_y: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return grad_y if mask is None else grad_y * mask


def upsample2_fwd(x: np.ndarray) -> np.ndarray:
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample2_bwd(grad_y: np.ndarray) -> np.ndarray:
    n, h, w, c = grad_y.shape
    return grad_y.reshape(n, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))
