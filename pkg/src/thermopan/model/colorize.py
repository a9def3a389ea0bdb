from __future__ import annotations

import numpy as np

from ..frequency import KernelSpec, decompose
from ..imgio import ThermalFrame
from ..pansharpen import FusionConfig, fuse
from ..preprocess import ensure_preprocessed
from .network import ModelParams, forward


def colorize(params: ModelParams, frame: ThermalFrame, fcfg: FusionConfig = FusionConfig(),
             spec: KernelSpec = KernelSpec(), **preprocess_options) -> np.ndarray:
    """Generated-colour LF fused with the thermal HF.

    Raw frames go through the default preprocessing chain first. Only the LF
    of the generated image is kept.
    """
    frame = ensure_preprocessed(frame, **preprocess_options)
    x = frame.pixels
    generated = forward(params, x)
    return fuse(decompose(generated, spec).lf, decompose(x, spec).hf, fcfg)


def thermal_baseline(frame: ThermalFrame, **preprocess_options) -> np.ndarray:
    """Preprocessed thermal replicated over RGB, the no-model reference."""
    frame = ensure_preprocessed(frame, **preprocess_options)
    return np.repeat(frame.pixels[..., None], 3, axis=-1)
