"""Encoder-decoder colorizer with skip connections.

Layout for ``depth = D`` and base ``width = w``::

    stem      conv3x3 1 -> c0 (+bias), LReLU
    down i    conv3x3 stride 2 c(i-1) -> c(i), IN, LReLU        i = 1..D
    dropout   on the bottleneck
    up i      upsample x2, concat skip c(i-1), conv3x3 -> c(i-1), IN, LReLU
    head      concat stem, conv3x3 2*c0 -> 3 (+bias), sigmoid

with ``c(i) = w * 2**min(i, 3)``. The stem is not normalized and feeds the
head directly, so absolute input levels survive to the output.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import layers as L


@dataclass(frozen=True)
class Architecture:
    width: int = 24
    depth: int = 4
    in_channels: int = 1
    out_channels: int = 3
    leaky_slope: float = 0.2
    dropout: float = 0.5

    def channels(self) -> list[int]:
        return [self.width * 2 ** min(i, 3) for i in range(self.depth + 1)]

    @property
    def factor(self) -> int:
        return 2 ** self.depth

    def to_dict(self) -> dict:
        return asdict(self)


class ModelParams(dict):
    """Ordered name -> tensor mapping plus the architecture that shapes it."""

    def __init__(self, arch: Architecture, tensors=()):
        super().__init__(tensors)
        self.arch = arch

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, ((k, v.copy()) for k, v in self.items()))

    def num_parameters(self) -> int:
        return int(sum(v.size for v in self.values()))


def _conv_specs(arch: Architecture) -> list[tuple[str, int, int, int, int]]:
    """(name, in, out, kernel, stride) for every convolution in forward order."""
    ch = arch.channels()
    specs = [("stem", arch.in_channels, ch[0], 3, 1)]
    for i in range(1, arch.depth + 1):
        specs.append((f"down{i}", ch[i - 1], ch[i], 3, 2))
    for i in range(arch.depth, 0, -1):
        specs.append((f"up{i}", ch[i] + ch[i - 1], ch[i - 1], 3, 1))
    specs.append(("head", 2 * ch[0], arch.out_channels, 3, 1))
    return specs


def init_params(arch: Architecture, seed=0) -> ModelParams:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = ModelParams(arch)
    for name, cin, cout, k, _ in _conv_specs(arch):
        p[f"{name}.w"] = L.he_init((cout, cin, k, k), rng)
        if name in ("stem", "head"):
            p[f"{name}.b"] = np.zeros(cout)
        else:
            p[f"{name}.scale"] = np.ones(cout)
            p[f"{name}.shift"] = np.zeros(cout)
    return p


def as_batch(x: np.ndarray) -> np.ndarray:
    """``(H, W)``, ``(H, W, C)`` or ``(N, H, W, C)`` -> ``(N, H, W, C)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None, :, :, None]
    if x.ndim == 3:
        return x[None]
    if x.ndim == 4:
        return x
    raise ValueError(f"cannot interpret shape {x.shape} as an image batch")


class Forward:
    """One forward evaluation, keeping what the backward pass needs."""

    def __init__(self, params: ModelParams, x: np.ndarray, train: bool = False,
                 rng: Optional[np.random.Generator] = None):
        arch = params.arch
        self.params = params
        self.arch = arch
        self.train = train
        x = as_batch(x)
        if x.shape[-1] != arch.in_channels:
            raise ValueError(f"expected {arch.in_channels} input channel(s), got {x.shape[-1]}")
        h, w = x.shape[1:3]
        if h % arch.factor or w % arch.factor:
            raise ValueError(f"input {h}x{w} is not divisible by the downsampling factor {arch.factor}")
        self.cache: dict = {}

        z, cols = L.conv2d_fwd(x, params["stem.w"], 1, 1, params["stem.b"], return_cols=True)
        self.cache["stem"] = (x, cols, z)
        feats = [L.leaky_relu_fwd(z, arch.leaky_slope)]
        h = feats[0]
        for i in range(1, arch.depth + 1):
            h = self._block(f"down{i}", h, 2)
            feats.append(h)
        h, self.cache["dropout"] = L.dropout_fwd(h, arch.dropout, train, rng)
        for i in range(arch.depth, 0, -1):
            up = L.upsample2_fwd(h)
            cat = np.concatenate([up, feats[i - 1]], axis=-1)
            h = self._block(f"up{i}", cat, 1)
        h = np.concatenate([h, feats[0]], axis=-1)
        self.cache["head.in"] = h
        z, self.cache["head.cols"] = L.conv2d_fwd(h, params["head.w"], 1, 1, params["head.b"],
                                                  return_cols=True)
        self.out = L.sigmoid_fwd(z)

    def _block(self, name: str, x: np.ndarray, stride: int) -> np.ndarray:
        p = self.params
        z, cols = L.conv2d_fwd(x, p[f"{name}.w"], stride, 1, return_cols=True)
        n, in_cache = L.instance_norm_fwd(z, p[f"{name}.scale"], p[f"{name}.shift"])
        self.cache[name] = (x, stride, cols, in_cache, n)
        return L.leaky_relu_fwd(n, self.arch.leaky_slope)

    def _block_bwd(self, name: str, g: np.ndarray, grads: dict) -> np.ndarray:
        p = self.params
        x, stride, cols, in_cache, n = self.cache[name]
        g = L.leaky_relu_bwd(g, n, self.arch.leaky_slope)
        g, grads[f"{name}.scale"], grads[f"{name}.shift"] = L.instance_norm_bwd(g, in_cache, p[f"{name}.scale"])
        g, grads[f"{name}.w"] = L.conv2d_bwd(g, x, p[f"{name}.w"], stride, 1, cols)
        return g

    def output(self) -> np.ndarray:
        """Generated image(s), ``(N, H, W, 3)``."""
        return self.out

    def backward(self, grad_out: np.ndarray) -> tuple[dict, np.ndarray]:
        """Gradients for ``grad_out`` shaped like :meth:`output`; returns (param grads, input grad)."""
        arch = self.arch
        p = self.params
        grads: dict = {}
        g = L.sigmoid_bwd(grad_out, self.out)
        grads["head.b"] = g.sum(axis=(0, 1, 2))
        g, grads["head.w"] = L.conv2d_bwd(g, self.cache["head.in"], p["head.w"], 1, 1,
                                             self.cache["head.cols"])

        ch = arch.channels()
        skip_grads = [None] * (arch.depth + 1)
        g, g_stem = g[..., :ch[0]], g[..., ch[0]:]
        for i in range(1, arch.depth + 1):
            g = self._block_bwd(f"up{i}", g, grads)
            g_up, skip_grads[i - 1] = g[..., :ch[i]], g[..., ch[i]:]
            g = L.upsample2_bwd(g_up)
        g = L.dropout_bwd(g, self.cache["dropout"])
        for i in range(arch.depth, 0, -1):
            g = self._block_bwd(f"down{i}", g, grads)
            g = g + skip_grads[i - 1]
        g = g + g_stem
        x, cols, z = self.cache["stem"]
        g = L.leaky_relu_bwd(g, z, arch.leaky_slope)
        grads["stem.b"] = g.sum(axis=(0, 1, 2))
        g, grads["stem.w"] = L.conv2d_bwd(g, x, p["stem.w"], 1, 1, cols)
        ordered = {k: grads[k] for k in p}
        return ordered, g


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Eval-mode colorization of one ``(H, W)`` / ``(H, W, 1)`` image -> ``(H, W, 3)`` in (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 4
    out = Forward(params, x, train=False).output()
    return out if batched else out[0]
