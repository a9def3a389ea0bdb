"""Mini-batch training loop for the colorizer."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..frequency import KernelSpec
from ..imgio import PairedSample
from .augment import augment_arrays
from .loss import LossConfig, loss_total
from .network import Architecture, Forward, ModelParams, init_params
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    lr: float = 8e-4
    decay_start_epoch: int = 400
    final_lr_fraction: float = 0.1
    batch_size: int = 32
    crop: int = 160
    iterations_per_epoch: int = 0  # 0: ceil(len(dataset) / batch_size)
    width: int = 24
    depth: int = 4
    leaky_slope: float = 0.2
    dropout: float = 0.5
    seed: int = 0
    random_crop: bool = True
    flip: bool = True
    rotate: bool = True

    def __post_init__(self):
        for name in ("lr", "batch_size", "crop", "width", "depth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0 or self.decay_start_epoch < 0 or self.iterations_per_epoch < 0:
            raise ValueError("epochs, decay_start_epoch and iterations_per_epoch must be >= 0")
        if not 0 < self.final_lr_fraction <= 1:
            raise ValueError("final_lr_fraction must be in (0, 1]")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Laptop-scale recipe: 64x64 crops, width 8."""
        base = dict(epochs=400, lr=8e-4, decay_start_epoch=160, batch_size=4, crop=64, width=8)
        base.update(overrides)
        return cls(**base)

    def architecture(self) -> Architecture:
        return Architecture(width=self.width, depth=self.depth, leaky_slope=self.leaky_slope,
                            dropout=self.dropout)

    def lr_at(self, epoch: int) -> float:
        """Constant, then linear decay to ``final_lr_fraction * lr`` at the last epoch."""
        last = self.epochs - 1
        if epoch < self.decay_start_epoch or last <= self.decay_start_epoch:
            return self.lr
        frac = (epoch - self.decay_start_epoch) / (last - self.decay_start_epoch)
        return self.lr * (1.0 - (1.0 - self.final_lr_fraction) * frac)


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str) -> tuple[TrainConfig, LossConfig]:
    """Read ``key = value`` lines (``#`` comments) into train and loss configs.

    Loss keys are ``alpha``, ``kernel_size`` and ``kernel_sigma``; ``preset =
    desk`` starts from :meth:`TrainConfig.desk` instead of the full recipe.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val

    preset = values.pop("preset", "full")
    if preset not in ("full", "desk"):
        raise ValueError(f"unknown preset {preset!r}")
    loss_kw = {}
    if "alpha" in values:
        loss_kw["alpha"] = float(values.pop("alpha"))
    kspec = KernelSpec(int(values.pop("kernel_size", 25)), float(values.pop("kernel_sigma", 12.0)))

    types = {f.name: f.type for f in fields(TrainConfig)}
    train_kw = {}
    for key, val in values.items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        t = types[key]
        train_kw[key] = _parse_bool(val) if t in (bool, "bool") else (
            int(val) if t in (int, "int") else float(val))
    tcfg = TrainConfig.desk(**train_kw) if preset == "desk" else TrainConfig(**train_kw)
    return tcfg, LossConfig(kernel=kspec, **loss_kw)


def format_config(tcfg: TrainConfig, lcfg: LossConfig) -> str:
    lines = [f"{k} = {v}" for k, v in asdict(tcfg).items()]
    lines += [f"alpha = {lcfg.alpha}", f"kernel_size = {lcfg.kernel.size}",
              f"kernel_sigma = {lcfg.kernel.sigma}"]
    return "\n".join(lines) + "\n"


HISTORY_FIELDS = ("epoch", "iterations", "lr", "loss_total", "loss_content", "loss_lf")


def write_history(history: Sequence[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_FIELDS)
        for row in history:
            w.writerow([row["epoch"], row["iterations"], f"{row['lr']:.6g}",
                        *(f"{row[k]:.8f}" for k in HISTORY_FIELDS[3:])])


def dataset_loss(params: ModelParams, dataset: Sequence[PairedSample],
                 lcfg: LossConfig = LossConfig()) -> float:
    """Eval-mode loss over whole images, averaged over samples."""
    vals = []
    for s in dataset:
        out = Forward(params, s.thermal.pixels).output()
        vals.append(loss_total(out, s.visible[None], lcfg).total)
    return float(np.mean(vals))


def train(dataset: Sequence[PairedSample], tcfg: TrainConfig = TrainConfig(),
          lcfg: LossConfig = LossConfig(), params: Optional[ModelParams] = None
          ) -> tuple[ModelParams, list[dict]]:
    """Train from He-initialized (or given) parameters; returns params and per-epoch history."""
    if not dataset:
        raise ValueError("training needs a non-empty dataset")
    for s in dataset:
        if not s.thermal.normalized:
            raise ValueError(f"sample {s.id}: thermal frame must be preprocessed first")
    seeds = np.random.SeedSequence(tcfg.seed).spawn(4)
    init_rng, batch_rng, aug_rng, drop_rng = (np.random.default_rng(s) for s in seeds)
    if params is None:
        params = init_params(tcfg.architecture(), init_rng)
    else:
        params = params.copy()
    arch = params.arch
    if tcfg.crop % arch.factor:
        raise ValueError(f"crop {tcfg.crop} is not divisible by the downsampling factor {arch.factor}")

    n = len(dataset)
    iters = tcfg.iterations_per_epoch or math.ceil(n / tcfg.batch_size)
    state = AdamState()
    history: list[dict] = []
    for epoch in range(tcfg.epochs):
        lr = tcfg.lr_at(epoch)
        sums = np.zeros(3)
        for _ in range(iters):
            idx = batch_rng.choice(n, size=tcfg.batch_size, replace=tcfg.batch_size > n)
            xs, ys = [], []
            for i in idx:
                t, v = augment_arrays(dataset[i].thermal.pixels, dataset[i].visible, tcfg.crop, aug_rng,
                                      random_crop=tcfg.random_crop, flip=tcfg.flip, rotate=tcfg.rotate)
                xs.append(t)
                ys.append(v)
            x = np.stack(xs)[..., None]
            y = np.stack(ys)
            fwd = Forward(params, x, train=True, rng=drop_rng)
            res = loss_total(fwd.output(), y, lcfg)
            if not math.isfinite(res.total):
                raise TrainingDiverged(
                    f"non-finite loss {res.total} at epoch {epoch}, iteration {state.t + 1} (lr {lr:g})")
            grads, _ = fwd.backward(res.grad)
            params, state = adam_step(params, grads, state, lr)
            sums += (res.total, res.content, res.lf)
        mean = sums / iters
        history.append({"epoch": epoch, "iterations": state.t, "lr": lr, "loss_total": mean[0],
                        "loss_content": mean[1], "loss_lf": mean[2]})
        if epoch % 50 == 0 or epoch == tcfg.epochs - 1:
            log.info("epoch %d/%d lr %.3g loss %.5f", epoch + 1, tcfg.epochs, lr, mean[0])
    return params, history
