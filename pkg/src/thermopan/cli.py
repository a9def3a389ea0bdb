"""``thermopan`` command line entry point.

Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import contextlib
import difflib
import json
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import imgio
from .frequency import KernelSpec, decompose
from .metrics import evaluate_set
from .pansharpen import FusionConfig, fuse, lambda_sweep
from .preprocess import preprocess_frame

log = logging.getLogger("thermopan")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """Exits with status 1 on usage errors and suggests close matches."""

    def error(self, message):
        hint = ""
        m = re.search(r"invalid choice: '([^']*)'", message)
        if m and self._subparsers is not None:
            choices = [c for a in self._subparsers._group_actions for c in (a.choices or {})]
            close = difflib.get_close_matches(m.group(1), choices, n=1)
            if close:
                hint = f"\ndid you mean '{close[0]}'?"
        m = re.search(r"unrecognized arguments: (\S+)", message)
        if m:
            parsers = [self]
            if self._subparsers is not None:
                parsers += [sp for a in self._subparsers._group_actions for sp in (a.choices or {}).values()]
            options = sorted({o for sp in parsers for a in sp._actions for o in a.option_strings})
            close = difflib.get_close_matches(m.group(1).split("=")[0], options, n=1)
            if close:
                hint = f"\ndid you mean '{close[0]}'?"
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}{hint}\n")
        sys.exit(EXIT_USAGE)


def _size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)(?:[x,](\d+))?", text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"expected N or HxW, got {text!r}")
    h = int(m.group(1))
    return h, int(m.group(2) or h)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _add_kernel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=12.0, help="Gaussian sigma in pixels (default 12)")
    p.add_argument("--size", type=int, default=25, help="odd Gaussian kernel width (default 25)")


def _add_preprocess_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-invert", action="store_true", help="skip thermal inversion")
    p.add_argument("--no-despike", action="store_true", help="skip spike removal")
    p.add_argument("--despike-window", type=int, default=5, help="odd despike window (default 5)")
    p.add_argument("--despike-k", type=float, default=3.0, help="despike std multiplier (default 3)")


def _preprocess_options(args) -> dict:
    return dict(despike_spikes=not args.no_despike, invert_frame=not args.no_invert,
                window=args.despike_window, k=args.despike_k)


def _kernel(args) -> KernelSpec:
    try:
        return KernelSpec(args.size, args.sigma)
    except ValueError as e:
        raise UsageError(str(e))


def _depth_for(path: Path) -> int:
    return 16 if path.suffix.lower() in imgio.TIFF_SUFFIXES else 8


def build_parser() -> Parser:
    parser = Parser(prog="thermopan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("preprocess", help="despike, normalize and invert a raw thermal frame")
    p.add_argument("--in", dest="input", required=True, help="raw thermal image (8/16-bit gray)")
    p.add_argument("--out", required=True, help="output image; .tif stores 16 bits, .png 8 bits")
    _add_preprocess_args(p)

    p = sub.add_parser("decompose", help="split an image into Gaussian LF and HF bands")
    p.add_argument("--in", dest="input", required=True, help="input image")
    _add_kernel_args(p)
    p.add_argument("--out-lf", required=True, help="low-frequency output image")
    p.add_argument("--out-hf", required=True,
                   help="high-frequency output, 16-bit offset-encoded: round((hf + 1) / 2 * 65535)")

    p = sub.add_parser("fuse", help="add lambda-weighted thermal HF to an RGB LF image")
    p.add_argument("--lf", required=True, help="RGB low-frequency image")
    p.add_argument("--hf", required=True, help="single-channel offset-encoded 16-bit HF image")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=3.0, help="HF gain (default 3)")
    p.add_argument("--mode", choices=("clip", "renormalize"), default="clip",
                   help="out-of-band handling (default clip)")
    p.add_argument("--out", required=True, help="fused output image")
    p.add_argument("--depth", type=int, choices=(8, 16), help="output bit depth (default: that of --lf)")

    p = sub.add_parser("sweep-lambda", help="PSNR statistics of ground-truth fusion per lambda")
    p.add_argument("--dataset", required=True, help="root with thermal/ and visible/ subdirectories")
    p.add_argument("--lambdas", type=_float_list, default=[0, 1, 2, 3, 4, 5],
                   help="comma-separated gains (default 0,1,2,3,4,5)")
    p.add_argument("--csv", required=True, help="output CSV path")
    p.add_argument("--no-clip", action="store_true", help="score unclipped fused images")
    _add_kernel_args(p)
    _add_preprocess_args(p)

    p = sub.add_parser("train", help="train the colorizer")
    p.add_argument("--dataset", required=True, help="root with thermal/ and visible/ subdirectories")
    p.add_argument("--config", help="key=value config file (default: full training recipe)")
    p.add_argument("--out", required=True, help="output parameter file")
    p.add_argument("--history", help="per-epoch loss CSV")
    _add_preprocess_args(p)

    p = sub.add_parser("colorize", help="colorize a thermal frame with trained parameters")
    p.add_argument("--params", required=True, help="parameter file from 'train'")
    p.add_argument("--in", dest="input", required=True, help="thermal image")
    p.add_argument("--preprocessed", action="store_true",
                   help="input is already normalized/inverted (e.g. written by 'preprocess')")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=3.0, help="HF gain (default 3)")
    p.add_argument("--mode", choices=("clip", "renormalize"), default="clip",
                   help="out-of-band handling (default clip)")
    p.add_argument("--out", required=True, help="output colour image")
    _add_kernel_args(p)
    _add_preprocess_args(p)

    p = sub.add_parser("evaluate", help="PSNR/SSIM/RMSE of predictions against ground truth")
    p.add_argument("--pred-dir", required=True, help="directory of predicted images")
    p.add_argument("--truth-dir", required=True, help="directory of ground-truth images (same stems)")
    p.add_argument("--csv", required=True, help="output CSV path")

    p = sub.add_parser("gen-synthetic", help="write a synthetic paired dataset")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("-n", type=int, default=16, help="number of pairs (default 16)")
    p.add_argument("--size", type=_size, default=(160, 160), help="N or HxW (default 160)")
    p.add_argument("--out", required=True, help="output root directory")
    return parser


def cmd_preprocess(args) -> None:
    frame = imgio.load_thermal(args.input)
    out = preprocess_frame(frame, **_preprocess_options(args))
    out = out.with_pixels(out.pixels, bit_depth=_depth_for(Path(args.out)))
    imgio.save_thermal(out, args.out)


def cmd_decompose(args) -> None:
    spec = _kernel(args)
    img = imgio.load_image(args.input)
    pair = decompose(img, spec)
    out_lf = Path(args.out_lf)
    # lf is a convex combination of [0, 1] values; clip only guards rounding
    imgio.save_image(np.clip(pair.lf, 0.0, 1.0), out_lf, _depth_for(out_lf))
    encoded = np.clip((pair.hf + 1.0) / 2.0, 0.0, 1.0)
    imgio.save_image(encoded, args.out_hf, depth=16)


def cmd_fuse(args) -> None:
    lf = imgio.load_image(args.lf)
    if lf.shape[-1] == 1:
        lf = np.repeat(lf, 3, axis=-1)
    if imgio.image_depth(args.hf) != 16:
        raise ValueError(f"{args.hf}: HF image must be 16-bit offset-encoded")
    hf_enc = imgio.load_image(args.hf)
    if hf_enc.shape[-1] != 1:
        raise ValueError(f"{args.hf}: HF image must be single-channel")
    hf = hf_enc * 2.0 - 1.0
    if lf.shape[:2] != hf.shape[:2]:
        raise ValueError(f"size mismatch: lf {lf.shape[:2]} vs hf {hf.shape[:2]}")
    out = fuse(lf, hf, FusionConfig(args.lam, args.mode))
    imgio.save_image(out, args.out, args.depth or imgio.image_depth(args.lf))


def _load_preprocessed(root, args):
    samples = imgio.load_dataset(root)
    if not samples:
        raise ValueError(f"no usable pairs under {root}")
    opts = _preprocess_options(args)
    return [imgio.PairedSample(preprocess_frame(s.thermal, **opts), s.visible, s.id) for s in samples]


def cmd_sweep_lambda(args) -> None:
    spec = _kernel(args)
    if not args.lambdas:
        raise UsageError("--lambdas needs at least one value")
    pairs = _load_preprocessed(args.dataset, args)
    report = lambda_sweep(pairs, args.lambdas, spec, "none" if args.no_clip else "clip")
    report.to_csv(args.csv)
    for row in report.rows:
        print(f"lambda={row.lam:g} mean_psnr={row.stats['mean']:.4f}")


def cmd_train(args) -> None:
    from .model import parse_config, save_params, train
    from .model.train import format_config, write_history

    if args.config:
        tcfg, lcfg = parse_config(Path(args.config).read_text())
    else:
        tcfg, lcfg = parse_config("")
    log.info("training configuration:\n%s", format_config(tcfg, lcfg))
    pairs = _load_preprocessed(args.dataset, args)
    params, history = train(pairs, tcfg, lcfg)
    save_params(params, args.out)
    if args.history:
        write_history(history, args.history)
    if history:
        print(f"final epoch loss {history[-1]['loss_total']:.6f}")


def cmd_colorize(args) -> None:
    from .model import colorize, load_params

    spec = _kernel(args)
    params = load_params(args.params)
    if args.preprocessed:
        frame = imgio.load_thermal(args.input)
        top = 2 ** frame.bit_depth - 1
        frame = frame.with_pixels(frame.pixels / top, normalized=True)
    else:
        frame = preprocess_frame(imgio.load_thermal(args.input), **_preprocess_options(args))
    out = colorize(params, frame, FusionConfig(args.lam, args.mode), spec)
    out_path = Path(args.out)
    imgio.save_image(out, out_path, _depth_for(out_path))


def cmd_evaluate(args) -> None:
    pred_dir, truth_dir = Path(args.pred_dir), Path(args.truth_dir)
    for d in (pred_dir, truth_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"no such directory: {d}")
    preds = {p.stem: p for p in sorted(pred_dir.iterdir()) if p.suffix.lower() in imgio.IMAGE_SUFFIXES}
    truths = {p.stem: p for p in sorted(truth_dir.iterdir()) if p.suffix.lower() in imgio.IMAGE_SUFFIXES}
    for stem in sorted(preds.keys() ^ truths.keys()):
        log.warning("unmatched file %s", stem)
    triples = []
    for stem in sorted(preds.keys() & truths.keys()):
        p, t = imgio.load_image(preds[stem]), imgio.load_image(truths[stem])
        if p.shape != t.shape:
            raise ValueError(f"{stem}: prediction {p.shape} and truth {t.shape} differ")
        triples.append((stem, p, t))
    report = evaluate_set(triples)
    report.to_csv(args.csv)
    p, s, r = report.aggregate
    print(f"images={len(triples)} psnr={p:.4f} ssim={s:.4f} rmse={r:.4f}")


def cmd_gen_synthetic(args) -> None:
    h, w = args.size
    samples = imgio.gen_synthetic_dataset(args.seed, args.n, h, w)
    imgio.save_dataset(samples, args.out)
    print(f"wrote {len(samples)} pairs to {args.out}")


COMMANDS = {
    "preprocess": cmd_preprocess,
    "decompose": cmd_decompose,
    "fuse": cmd_fuse,
    "sweep-lambda": cmd_sweep_lambda,
    "train": cmd_train,
    "colorize": cmd_colorize,
    "evaluate": cmd_evaluate,
    "gen-synthetic": cmd_gen_synthetic,
}


def _thread_limit():
    raw = os.environ.get("THERMOPAN_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"THERMOPAN_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise UsageError("THERMOPAN_THREADS must be >= 0")
    if n == 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    resolved = {k: v for k, v in vars(args).items()}
    log.info("resolved configuration: %s", json.dumps(resolved, default=str, sort_keys=True))
    try:
        with _thread_limit():
            COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"thermopan {args.command}: error: {e}\n")
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError) as e:
        log.error("%s", e)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
