"""Fusion of colour low frequencies with thermal high frequencies.

``fused = lf_rgb + lam * hf_thermal`` (thermal HF replicated over RGB), then
out-of-band handling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .frequency import KernelSpec, decompose, replicate3
from .imgio import PairedSample, as_image
from .metrics import psnr

OUT_OF_BAND_MODES = ("clip", "renormalize", "none")


@dataclass(frozen=True)
class FusionConfig:
    lam: float = 3.0
    out_of_band: str = "clip"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.out_of_band not in OUT_OF_BAND_MODES:
            raise ValueError(f"out_of_band must be one of {OUT_OF_BAND_MODES}, got {self.out_of_band!r}")


def inject_hf(lf_rgb: np.ndarray, hf_thermal: np.ndarray, lam: float) -> np.ndarray:
    """Unclipped fusion; may leave [0, 1]."""
    lf = as_image(lf_rgb)
    hf = as_image(hf_thermal)
    if lf.shape[-1] != 3:
        raise ValueError("low-frequency input must have 3 channels")
    if lf.shape[:2] != hf.shape[:2]:
        raise ValueError(f"size mismatch: lf {lf.shape[:2]} vs hf {hf.shape[:2]}")
    return lf + lam * replicate3(hf)


def renormalize(img: np.ndarray) -> np.ndarray:
    """One affine map for all channels, applied only when something is out of band.

    The range ``[min(lo, 0), max(hi, 1)]`` is mapped onto ``[0, 1]``.
    """
    lo, hi = float(img.min()), float(img.max())
    if lo >= 0.0 and hi <= 1.0:
        return img
    lo, hi = min(lo, 0.0), max(hi, 1.0)
    return np.clip((img - lo) / (hi - lo), 0.0, 1.0)


def handle_out_of_band(img: np.ndarray, mode: str) -> np.ndarray:
    if mode == "clip":
        return np.clip(img, 0.0, 1.0)
    if mode == "renormalize":
        return renormalize(img)
    if mode == "none":
        return img
    raise ValueError(f"unknown out-of-band mode {mode!r}")


def fuse(lf_rgb: np.ndarray, hf_thermal: np.ndarray, cfg: FusionConfig = FusionConfig()) -> np.ndarray:
    return handle_out_of_band(inject_hf(lf_rgb, hf_thermal, cfg.lam), cfg.out_of_band)


def oracle_fuse(pair: PairedSample, spec: KernelSpec = KernelSpec(),
                cfg: FusionConfig = FusionConfig()) -> np.ndarray:
    """Fuse the ground-truth visible LF with the thermal HF (upper bound for the model)."""
    if not pair.thermal.normalized:
        raise ValueError(f"sample {pair.id}: thermal frame must be preprocessed first")
    vis_lf = decompose(pair.visible, spec).lf
    th_hf = decompose(pair.thermal.pixels, spec).hf
    return fuse(vis_lf, th_hf, cfg)


STAT_NAMES = ("min", "q1", "median", "q3", "max", "mean")


@dataclass
class SweepRow:
    lam: float
    stats: dict[str, float]
    values: np.ndarray


@dataclass
class SweepReport:
    rows: list[SweepRow]

    def mean_psnr(self) -> list[float]:
        return [r.stats["mean"] for r in self.rows]

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", *STAT_NAMES])
            for r in self.rows:
                w.writerow([f"{r.lam:g}", *(f"{r.stats[k]:.6f}" for k in STAT_NAMES)])


def summarize(values: Iterable[float]) -> dict[str, float]:
    v = np.asarray(list(values), dtype=np.float64)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(v.max()), "mean": float(v.mean())}


def lambda_sweep(pairs: Sequence[PairedSample], lambdas: Sequence[float],
                 spec: KernelSpec = KernelSpec(), out_of_band: str = "clip") -> SweepReport:
    """PSNR distribution of :func:`oracle_fuse` against the visible image, per lambda."""
    if not pairs:
        raise ValueError("lambda_sweep needs at least one pair")
    if not lambdas:
        raise ValueError("lambda_sweep needs at least one lambda")
    ordered = sorted(pairs, key=lambda p: p.id)
    # decomposition does not depend on lambda; do it once per pair
    bands = [(decompose(p.visible, spec).lf, decompose(p.thermal.pixels, spec).hf, p.visible)
             for p in ordered if _check_preprocessed(p)]
    rows = []
    for lam in lambdas:
        cfg = FusionConfig(float(lam), out_of_band)
        values = np.array([psnr(fuse(lf, hf, cfg), vis) for lf, hf, vis in bands])
        rows.append(SweepRow(float(lam), summarize(values), values))
    return SweepReport(rows)


def _check_preprocessed(p: PairedSample) -> bool:
    if not p.thermal.normalized:
        raise ValueError(f"sample {p.id}: thermal frame must be preprocessed first")
    return True
