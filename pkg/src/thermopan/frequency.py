"""Gaussian low-pass filtering and low/high frequency decomposition.

Images are numpy arrays shaped ``(H, W)``, ``(H, W, C)`` or batched
``(N, H, W, C)``; the spatial axes are always the two that precede the
channel axis. Borders use reflect padding (``d c b | a b c d | c b a``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

PAD_MODE = "reflect"


@dataclass(frozen=True)
class KernelSpec:
    size: int = 25
    sigma: float = 12.0

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1 or self.size % 2 == 0:
            raise ValueError(f"kernel size must be a positive odd integer, got {self.size}")
        if not self.sigma > 0:
            raise ValueError(f"kernel sigma must be positive, got {self.sigma}")

    @property
    def radius(self) -> int:
        return self.size // 2


@dataclass(frozen=True)
class Kernel:
    """Normalized 2-D weights; ``factor`` is the 1-D profile when separable."""

    weights: np.ndarray
    factor: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass
class FrequencyPair:
    lf: np.ndarray
    hf: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.lf + self.hf


def gaussian_kernel(spec: KernelSpec) -> Kernel:
    """Truncated isotropic Gaussian on a ``size x size`` grid, summing to one."""
    r = spec.radius
    t = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * spec.sigma ** 2))
    g /= g.sum()
    # exp(-(i^2+j^2)/2s^2) factorizes, so the normalized 2-D kernel is outer(g, g)
    w = np.outer(g, g)
    w /= w.sum()
    return Kernel(weights=w, factor=g)


def _spatial_axes(x: np.ndarray) -> tuple[int, int]:
    if x.ndim == 2:
        return 0, 1
    if x.ndim in (3, 4):
        return x.ndim - 3, x.ndim - 2
    raise ValueError(f"expected 2-D, 3-D or 4-D image array, got shape {x.shape}")


def reflect_index(n: int, radius: int) -> np.ndarray:
    """Source index for every position of a reflect-padded axis of length ``n``."""
    if n == 1:
        return np.zeros(n + 2 * radius, dtype=np.intp)
    return np.pad(np.arange(n), radius, mode=PAD_MODE)


@lru_cache(maxsize=64)
def _axis_operator_cached(n: int, taps: bytes) -> np.ndarray:
    g = np.frombuffer(taps, dtype=np.float64)
    r = len(g) // 2
    idx = reflect_index(n, r)
    op = np.zeros((n, n))
    rows = np.arange(n)
    for k, gk in enumerate(g):
        np.add.at(op, (rows, idx[rows + k]), gk)
    op.setflags(write=False)
    return op


def axis_operator(n: int, taps: np.ndarray) -> np.ndarray:
    """Dense ``n x n`` matrix of 1-D reflect-padded correlation with ``taps``."""
    return _axis_operator_cached(int(n), np.ascontiguousarray(taps, dtype=np.float64).tobytes())


def _apply_separable(x: np.ndarray, g: np.ndarray, transpose: bool) -> np.ndarray:
    ah, aw = _spatial_axes(x)
    mh = axis_operator(x.shape[ah], g)
    mw = axis_operator(x.shape[aw], g)
    if transpose:
        mh, mw = mh.T, mw.T
    out = np.moveaxis(np.tensordot(mh, x, axes=(1, ah)), 0, ah)
    out = np.moveaxis(np.tensordot(mw, out, axes=(1, aw)), 0, aw)
    return out


def convolve_direct(img: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Full 2-D reflect-padded correlation, one shifted slice per kernel tap."""
    x = np.asarray(img, dtype=np.float64)
    ah, aw = _spatial_axes(x)
    w = kernel.weights
    r = w.shape[0] // 2
    H, W = x.shape[ah], x.shape[aw]
    xp = np.take(x, reflect_index(H, r), axis=ah)
    xp = np.take(xp, reflect_index(W, r), axis=aw)
    out = np.zeros_like(x)
    for a in range(w.shape[0]):
        rows = np.take(xp, np.arange(a, a + H), axis=ah)
        for b in range(w.shape[1]):
            if w[a, b] != 0.0:
                out += w[a, b] * np.take(rows, np.arange(b, b + W), axis=aw)
    return out


def convolve(img: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Same-size reflect-padded filtering; channels are filtered independently."""
    x = np.asarray(img, dtype=np.float64)
    if kernel.factor is not None:
        return _apply_separable(x, kernel.factor, transpose=False)
    return convolve_direct(x, kernel)


def convolve_adjoint(grad: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Adjoint of :func:`convolve`, i.e. the backward pass of the blur.

    Reflect padding folds border taps back inside the image, so the adjoint is
    not a plain convolution near the edges.
    """
    g = np.asarray(grad, dtype=np.float64)
    if kernel.factor is None:
        raise ValueError("adjoint is only implemented for separable kernels")
    return _apply_separable(g, kernel.factor, transpose=True)


def decompose(img: np.ndarray, spec: KernelSpec = KernelSpec()) -> FrequencyPair:
    x = np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("image contains non-finite values")
    lf = convolve(x, gaussian_kernel(spec))
    return FrequencyPair(lf=lf, hf=x - lf)


def replicate3(img: np.ndarray) -> np.ndarray:
    x = np.asarray(img)
    if x.ndim == 2:
        x = x[..., None]
    if x.shape[-1] != 1:
        raise ValueError(f"replicate3 expects a single-channel image, got {x.shape[-1]} channels")
    return np.repeat(x, 3, axis=-1)
