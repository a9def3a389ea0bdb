"""Geometric augmentation applied identically to both modalities."""

from __future__ import annotations

import numpy as np

from ..imgio import PairedSample


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def augment_arrays(thermal: np.ndarray, visible: np.ndarray, crop: int, seed=None, *,
                   random_crop: bool = True, flip: bool = True,
                   rotate: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Crop, flip and rotate by k*90 degrees (k in {-1, 0, 1}).

    With every option disabled this is a centred crop.
    """
    h, w = thermal.shape[:2]
    if visible.shape[:2] != (h, w):
        raise ValueError("thermal and visible sizes differ")
    if crop > h or crop > w:
        raise ValueError(f"image {h}x{w} is smaller than the {crop}x{crop} crop")
    rng = _rng(seed)
    if random_crop:
        top = int(rng.integers(0, h - crop + 1))
        left = int(rng.integers(0, w - crop + 1))
    else:
        top, left = (h - crop) // 2, (w - crop) // 2
    t = thermal[top:top + crop, left:left + crop]
    v = visible[top:top + crop, left:left + crop]
    if flip:
        if rng.random() < 0.5:
            t, v = t[:, ::-1], v[:, ::-1]
        if rng.random() < 0.5:
            t, v = t[::-1], v[::-1]
    if rotate:
        k = int(rng.integers(-1, 2))
        t, v = np.rot90(t, k, axes=(0, 1)), np.rot90(v, k, axes=(0, 1))
    return np.ascontiguousarray(t), np.ascontiguousarray(v)


def augment(sample: PairedSample, crop: int = 160, seed=None, **options) -> PairedSample:
    t, v = augment_arrays(sample.thermal.pixels, sample.visible, crop, seed, **options)
    return PairedSample(sample.thermal.with_pixels(t), v, sample.id)
