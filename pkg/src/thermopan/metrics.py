"""Full-reference image quality metrics on [0, 1] images and set-level reports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imgio import as_image

PSNR_CAP = 100.0
RMSE_FLOOR = 1e-5

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def rmse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr_from_rmse(e: float) -> float:
    if e < RMSE_FLOOR:
        return PSNR_CAP
    return 20.0 * math.log10(1.0 / e)


def psnr(a, b) -> float:
    """Peak 1.0, capped at 100 dB for near-identical inputs."""
    return psnr_from_rmse(rmse(a, b))


def _gauss_1d(size: int, sigma: float) -> np.ndarray:
    t = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable 'valid' correlation over the first two axes
    n = len(g)
    H, W = x.shape[:2]
    tmp = sum(g[i] * x[i:H - n + 1 + i] for i in range(n))
    return sum(g[j] * tmp[:, j:W - n + 1 + j] for j in range(n))


def ssim(a, b) -> float:
    """Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), L = 1.

    Local statistics are taken at every fully contained window position; the
    map is averaged over positions, then over channels.
    """
    a, b = _pair(a, b)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    g = _gauss_1d(SSIM_WINDOW, SSIM_SIGMA)
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    per_channel = (num / den).mean(axis=(0, 1))
    return float(per_channel.mean())


@dataclass
class ImageScore:
    id: str
    psnr: float
    ssim: float
    rmse: float


@dataclass
class MetricReport:
    per_image: list[ImageScore] = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([s.psnr for s in self.per_image]))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([s.ssim for s in self.per_image]))

    @property
    def mean_rmse(self) -> float:
        return float(np.mean([s.rmse for s in self.per_image]))

    @property
    def aggregate(self) -> tuple[float, float, float]:
        return self.mean_psnr, self.mean_ssim, self.mean_rmse

    def rows(self) -> list[list[str]]:
        out = [[s.id, f"{s.psnr:.6f}", f"{s.ssim:.6f}", f"{s.rmse:.6f}"] for s in self.per_image]
        p, s, r = self.aggregate
        out.append(["MEAN", f"{p:.6f}", f"{s:.6f}", f"{r:.6f}"])
        return out

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "psnr", "ssim", "rmse"])
            w.writerows(self.rows())


def score(id_: str, prediction, truth) -> ImageScore:
    e = rmse(prediction, truth)
    return ImageScore(id_, psnr_from_rmse(e), ssim(prediction, truth), e)


def evaluate_set(pairs) -> MetricReport:
    """``pairs`` holds ``(id, prediction, truth)`` triples; means are unweighted."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("evaluate_set needs at least one pair")
    return MetricReport([score(i, p, t) for i, p, t in pairs])
