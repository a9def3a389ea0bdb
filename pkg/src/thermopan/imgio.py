"""Image file I/O, dataset pairing and a synthetic paired-scene generator.

8-bit rasters go to PNG, 16-bit rasters to uncompressed single-strip TIFF
(16-bit PNG is accepted on read). Visible images are float64 arrays in
``[0, 1]`` shaped ``(H, W, C)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import tifffile
from PIL import Image

log = logging.getLogger(__name__)

TIFF_SUFFIXES = {".tif", ".tiff"}
PNG_SUFFIXES = {".png"}
IMAGE_SUFFIXES = TIFF_SUFFIXES | PNG_SUFFIXES


@dataclass
class ThermalFrame:
    pixels: np.ndarray
    bit_depth: int = 16
    normalized: bool = False
    min_raw: float = 0.0
    max_raw: float = 0.0

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2:
            raise ValueError(f"thermal frame must be 2-D, got shape {self.pixels.shape}")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        if self.min_raw > self.max_raw:
            raise ValueError("min_raw exceeds max_raw")
        if self.normalized and self.pixels.size and (self.pixels.min() < 0 or self.pixels.max() > 1):
            raise ValueError("normalized frame has pixels outside [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def with_pixels(self, pixels: np.ndarray, **changes) -> "ThermalFrame":
        return replace(self, pixels=pixels, **changes)


@dataclass
class PairedSample:
    thermal: ThermalFrame
    visible: np.ndarray
    id: str

    def __post_init__(self):
        if self.visible.ndim != 3 or self.visible.shape[-1] != 3:
            raise ValueError(f"visible image must be H x W x 3, got {self.visible.shape}")
        if self.thermal.shape != self.visible.shape[:2]:
            raise ValueError(
                f"sample {self.id}: thermal {self.thermal.shape} and visible "
                f"{self.visible.shape[:2]} sizes differ"
            )


def as_image(img: np.ndarray) -> np.ndarray:
    """View a 2-D or 3-D array as ``(H, W, C)`` float64."""
    x = np.asarray(img, dtype=np.float64)
    if x.ndim == 2:
        x = x[..., None]
    if x.ndim != 3 or x.shape[-1] not in (1, 3):
        raise ValueError(f"expected an H x W x C image with C in (1, 3), got {x.shape}")
    return x


def _read_raw(path: Path) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix in TIFF_SUFFIXES:
        return tifffile.imread(path)
    if suffix in PNG_SUFFIXES:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I;16L"):
                return np.asarray(im, dtype=np.uint16)
            if im.mode == "I":
                return np.asarray(im).astype(np.uint16)
            if im.mode in ("L", "RGB"):
                return np.asarray(im)
            if im.mode == "RGBA":
                return np.asarray(im.convert("RGB"))
            raise ValueError(f"{path}: unsupported PNG mode {im.mode}")
    raise ValueError(f"{path}: unsupported image format {suffix!r}")


def _depth_of(arr: np.ndarray, path: Path) -> int:
    if arr.dtype == np.uint8:
        return 8
    if arr.dtype == np.uint16:
        return 16
    raise ValueError(f"{path}: unsupported sample type {arr.dtype} (need 8- or 16-bit integers)")


def load_thermal(path) -> ThermalFrame:
    path = Path(path)
    arr = _read_raw(path)
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    if arr.ndim != 2:
        raise ValueError("thermal input must be single-channel")
    depth = _depth_of(arr, path)
    px = arr.astype(np.float64)
    return ThermalFrame(px, bit_depth=depth, normalized=False,
                        min_raw=float(px.min()), max_raw=float(px.max()))


def load_image(path) -> np.ndarray:
    """Load an 8- or 16-bit gray/RGB file as ``(H, W, C)`` in ``[0, 1]``."""
    path = Path(path)
    arr = _read_raw(path)
    depth = _depth_of(arr, path)
    return as_image(arr.astype(np.float64) / (2 ** depth - 1))


def image_depth(path) -> int:
    path = Path(path)
    return _depth_of(_read_raw(path), path)


def quantize(img: np.ndarray, depth: int) -> np.ndarray:
    """Round ``[0, 1]`` intensities to the nearest level (halves round up)."""
    if depth not in (8, 16):
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    x = np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("image contains non-finite values")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError(
            f"pixels outside [0, 1] (min {x.min():.6g}, max {x.max():.6g}); clip or renormalize first"
        )
    top = 2 ** depth - 1
    dtype = np.uint8 if depth == 8 else np.uint16
    return np.floor(x * top + 0.5).astype(dtype)


def write_raw(arr: np.ndarray, path) -> None:
    """Write an integer raster; the suffix picks PNG or TIFF."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    if suffix in TIFF_SUFFIXES:
        photometric = "rgb" if arr.ndim == 3 else "minisblack"
        tifffile.imwrite(path, arr, photometric=photometric, compression=None,
                         rowsperstrip=arr.shape[0], metadata=None)
    elif suffix in PNG_SUFFIXES:
        if arr.dtype == np.uint16 and arr.ndim != 2:
            raise ValueError("16-bit PNG output supports grayscale only; use .tif")
        Image.fromarray(arr).save(path)
    else:
        raise ValueError(f"{path}: unsupported image format {suffix!r}")


def save_image(img: np.ndarray, path, depth: int = 8) -> None:
    write_raw(quantize(as_image(img), depth), path)


def save_thermal(frame: ThermalFrame, path) -> None:
    """Store raw counts losslessly, or a normalized frame scaled to full range."""
    if frame.normalized:
        write_raw(quantize(frame.pixels, frame.bit_depth), path)
        return
    px = frame.pixels
    top = 2 ** frame.bit_depth - 1
    if px.min() < 0 or px.max() > top or np.any(px != np.round(px)):
        raise ValueError(f"raw pixels must be integers in [0, {top}]")
    write_raw(px.astype(np.uint8 if frame.bit_depth == 8 else np.uint16), path)


def _stems(directory: Path) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
            if p.stem in found:
                log.warning("duplicate stem %r in %s; keeping %s", p.stem, directory, found[p.stem].name)
                continue
            found[p.stem] = p
    return found


def pair_dataset(thermal_dir, visible_dir) -> list[PairedSample]:
    """Match thermal and visible files by stem; problems are logged, never silent."""
    thermal_dir, visible_dir = Path(thermal_dir), Path(visible_dir)
    for d in (thermal_dir, visible_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"no such directory: {d}")
    th, vis = _stems(thermal_dir), _stems(visible_dir)
    for stem in sorted(th.keys() - vis.keys()):
        log.warning("unmatched thermal file %s (no visible counterpart)", th[stem].name)
    for stem in sorted(vis.keys() - th.keys()):
        log.warning("unmatched visible file %s (no thermal counterpart)", vis[stem].name)
    samples = []
    for stem in sorted(th.keys() & vis.keys()):
        frame = load_thermal(th[stem])
        visible = load_image(vis[stem])
        if visible.shape[-1] == 1:
            visible = np.repeat(visible, 3, axis=-1)
        if frame.shape != visible.shape[:2]:
            log.warning("pair %s rejected: size mismatch (thermal %s, visible %s)",
                        stem, frame.shape, visible.shape[:2])
            continue
        samples.append(PairedSample(frame, visible, stem))
    return samples


def load_dataset(root) -> list[PairedSample]:
    root = Path(root)
    return pair_dataset(root / "thermal", root / "visible")


def save_dataset(samples: list[PairedSample], root) -> None:
    root = Path(root)
    for s in samples:
        save_thermal(s.thermal, root / "thermal" / f"{s.id}.tif")
        save_image(s.visible, root / "visible" / f"{s.id}.png", depth=8)


# Synthetic scenes. Each region class ties a raw thermal level to a visible
# colour, so colour is (up to texture) a function of temperature.
SKY_COLOR = np.array([0.80, 0.88, 0.97])
FOLIAGE_COLOR = np.array([0.16, 0.42, 0.14])
HOT_COLOR = np.array([0.52, 0.52, 0.52])
GROUND_COLOR = np.array([0.46, 0.40, 0.34])

SKY_RAW = 6000.0
FOLIAGE_RAW = 7600.0
GROUND_RAW = 8100.0
HOT_RAW = 9600.0
SPIKE_PROB = 1e-3


def _smooth_noise(rng: np.random.Generator, h: int, w: int, cell: int) -> np.ndarray:
    """Bilinearly upsampled coarse noise in [-1, 1]."""
    gh, gw = h // cell + 2, w // cell + 2
    coarse = rng.uniform(-1.0, 1.0, size=(gh, gw))
    yy = np.arange(h) / cell
    xx = np.arange(w) / cell
    y0, x0 = np.floor(yy).astype(int), np.floor(xx).astype(int)
    fy, fx = (yy - y0)[:, None], (xx - x0)[None, :]
    c00 = coarse[y0][:, x0]
    c01 = coarse[y0][:, x0 + 1]
    c10 = coarse[y0 + 1][:, x0]
    c11 = coarse[y0 + 1][:, x0 + 1]
    return (c00 * (1 - fy) * (1 - fx) + c01 * (1 - fy) * fx
            + c10 * fy * (1 - fx) + c11 * fy * fx)


def _scene(rng: np.random.Generator, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[0:h, 0:w]
    labels = np.full((h, w), 1)  # foliage
    horizon = h * rng.uniform(0.25, 0.4) + (h * 0.06) * np.sin(xx / w * 2 * np.pi * rng.uniform(0.5, 1.5)
                                                               + rng.uniform(0, 2 * np.pi))
    labels[yy < horizon] = 0  # sky
    ground = h * rng.uniform(0.7, 0.8)
    labels[yy >= ground] = 2
    for _ in range(rng.integers(1, 4)):
        # hot objects: upright boxes/ellipses standing on the ground
        cw = w * rng.uniform(0.08, 0.2)
        ch = h * rng.uniform(0.15, 0.35)
        cx = rng.uniform(cw, w - cw)
        cy = ground - ch * rng.uniform(0.2, 0.6)
        if rng.random() < 0.5:
            mask = ((yy - cy) / ch) ** 2 + ((xx - cx) / cw) ** 2 <= 1.0
        else:
            mask = (np.abs(yy - cy) <= ch) & (np.abs(xx - cx) <= cw)
        labels[mask] = 3

    colors = np.stack([SKY_COLOR, FOLIAGE_COLOR, GROUND_COLOR, HOT_COLOR])
    raws = np.array([SKY_RAW, FOLIAGE_RAW, GROUND_RAW, HOT_RAW])

    vis_tex = 0.02 * _smooth_noise(rng, h, w, 4)
    visible = np.clip(colors[labels] + vis_tex[..., None], 0.0, 1.0)

    # thermal-only structure: warm patches and sensor texture absent from the visible image
    warm = 450.0 * _smooth_noise(rng, h, w, 6)
    grain = rng.normal(0.0, 120.0, size=(h, w))
    thermal = raws[labels] + warm + grain
    return thermal, visible


def gen_synthetic_dataset(seed: int, n: int, h: int, w: int) -> list[PairedSample]:
    """Deterministic paired scenes with raw 16-bit thermal counts and sparse spikes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if h < 32 or w < 32:
        raise ValueError("h and w must be >= 32")
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        thermal, visible = _scene(rng, h, w)
        spikes = rng.random((h, w)) < SPIKE_PROB
        hot = rng.random((h, w)) < 0.5
        thermal = np.where(spikes, np.where(hot, 60000.0, 200.0), thermal)
        thermal = np.clip(np.round(thermal), 0, 65535)
        frame = ThermalFrame(thermal, bit_depth=16, normalized=False,
                             min_raw=float(thermal.min()), max_raw=float(thermal.max()))
        samples.append(PairedSample(frame, visible, f"{seed:04d}_{i:04d}"))
    return samples
