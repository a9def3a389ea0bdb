"""Thermal frame conditioning: de-spiking, min-max normalization, inversion."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imgio import ThermalFrame


def instance_normalize(frame: ThermalFrame) -> ThermalFrame:
    """Per-frame min-max scaling to [0, 1]; a constant frame becomes all 0.5."""
    if frame.normalized:
        raise ValueError("frame is already normalized")
    px = frame.pixels
    lo, hi = float(px.min()), float(px.max())
    if hi > lo:
        out = (px - lo) / (hi - lo)
    else:
        out = np.full_like(px, 0.5)
    return frame.with_pixels(out, normalized=True, min_raw=lo, max_raw=hi)


def invert(frame: ThermalFrame) -> ThermalFrame:
    """Cold sky maps near 1, like its visible counterpart."""
    if not frame.normalized:
        raise ValueError("invert requires a normalized frame")
    return frame.with_pixels(1.0 - frame.pixels)


def despike_array(px: np.ndarray, window: int = 5, k: float = 3.0) -> np.ndarray:
    """Replace pixels deviating from their window median by more than k window stds.

    Statistics come from the original values (one pass, not cascaded) over a
    reflect-padded ``window x window`` neighbourhood.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"despike window must be odd and >= 3, got {window}")
    px = np.asarray(px, dtype=np.float64)
    r = window // 2
    padded = np.pad(px, r, mode="reflect") if min(px.shape) > 1 else np.pad(px, r, mode="edge")
    win = sliding_window_view(padded, (window, window))
    med = np.median(win, axis=(-2, -1))
    std = win.std(axis=(-2, -1))
    spikes = np.abs(px - med) > k * std
    return np.where(spikes, med, px)


def despike(frame: ThermalFrame, window: int = 5, k: float = 3.0) -> ThermalFrame:
    return frame.with_pixels(despike_array(frame.pixels, window, k))


def preprocess_frame(frame: ThermalFrame, *, despike_spikes: bool = True, invert_frame: bool = True,
                     window: int = 5, k: float = 3.0) -> ThermalFrame:
    """Default chain on a raw frame: despike, normalize, invert."""
    if frame.normalized:
        raise ValueError("frame is already normalized")
    if despike_spikes:
        frame = despike(frame, window, k)
    frame = instance_normalize(frame)
    if invert_frame:
        frame = invert(frame)
    return frame


def ensure_preprocessed(frame: ThermalFrame, **kwargs) -> ThermalFrame:
    return frame if frame.normalized else preprocess_frame(frame, **kwargs)
