from .augment import augment, augment_arrays
from .colorize import colorize, thermal_baseline
from .layers import he_init
from .loss import LossConfig, LossResult, loss_total
from .network import Architecture, Forward, ModelParams, forward, init_params
from .optim import AdamState, adam_step
from .params_io import load_params, save_params
from .train import TrainConfig, TrainingDiverged, dataset_loss, parse_config, train

__all__ = [
    "AdamState", "Architecture", "Forward", "LossConfig", "LossResult", "ModelParams",
    "TrainConfig", "TrainingDiverged", "adam_step", "augment", "augment_arrays", "colorize",
    "dataset_loss", "forward", "he_init", "init_params", "load_params", "loss_total",
    "parse_config", "save_params", "thermal_baseline", "train",
]
