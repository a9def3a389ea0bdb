from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..frequency import KernelSpec, convolve, convolve_adjoint, gaussian_kernel


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 10.0
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass
class LossResult:
    total: float
    content: float
    lf: float
    grad: np.ndarray


def loss_total(gx: np.ndarray, y: np.ndarray, cfg: LossConfig = LossConfig()) -> LossResult:
    """L1 content loss plus ``alpha`` times the MSE between Gaussian-blurred images.

    Both terms are per-element means. ``grad`` is d(total)/d(gx).
    """
    gx = np.asarray(gx, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if gx.shape != y.shape:
        raise ValueError(f"shape mismatch: {gx.shape} vs {y.shape}")
    n = gx.size
    diff = gx - y
    content = float(np.abs(diff).mean())

    kernel = gaussian_kernel(cfg.kernel)
    lf_diff = convolve(gx, kernel) - convolve(y, kernel)
    lf = float(np.mean(lf_diff ** 2))

    grad = np.sign(diff) / n + cfg.alpha * convolve_adjoint(2.0 * lf_diff / n, kernel)
    return LossResult(content + cfg.alpha * lf, content, lf, grad)
