"""Thermal-to-visible colorization by low-frequency prediction and pansharpening."""

from .frequency import FrequencyPair, Kernel, KernelSpec, convolve, decompose, gaussian_kernel, replicate3
from .imgio import PairedSample, ThermalFrame, gen_synthetic_dataset, load_image, load_thermal, pair_dataset, save_image
from .metrics import MetricReport, evaluate_set, psnr, rmse, ssim
from .pansharpen import FusionConfig, SweepReport, fuse, lambda_sweep, oracle_fuse
from .preprocess import despike, instance_normalize, invert, preprocess_frame

__version__ = "0.1.0"
