"""Command-line front end: train, eval, corrupt, export."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .config import StepSchedule, StopRule, TrainConfig
from .data import (
    TileSpec,
    load_grayscale,
    salt_pepper_corrupt,
    split_image,
    tikhonov_highpass,
    tikhonov_highpass_masked,
)
from .evaluate import test_objective, write_log_csv
from .fileio import (
    load_dictionary,
    load_mask_pgm,
    read_config_file,
    save_dictionary,
    save_filter_grid,
    save_mask_pgm,
)
from .sgd import train_sgd
from .signals import Mask, Signal
from .surrogate import train_surrogate

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
MASK_SUFFIX = ".mask.pgm"


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected RxC, got {text!r}") from exc


def _list_images(directory: Path) -> list[Path]:
    paths = [
        p
        for p in sorted(directory.iterdir())
        if p.suffix.lower() in IMAGE_SUFFIXES and not p.name.endswith(MASK_SUFFIX)
    ]
    if not paths:
        raise FileNotFoundError(f"no image files in {directory}")
    return paths


def _center_crop(s: Signal, dims: tuple[int, int]) -> Signal:
    rows, cols = s.shape
    cr, cc = dims
    if cr > rows or cc > cols:
        raise ValueError(f"crop {cr}x{cc} larger than image {rows}x{cols}")
    r0 = (rows - cr) // 2
    c0 = (cols - cc) // 2
    return Signal(s.values[r0 : r0 + cr, c0 : c0 + cc].copy())


def _load_corpus(directory, crop, masked, highpass_weight):
    """Load, preprocess and return (signals, masks-or-None)."""
    signals, masks = [], []
    for path in _list_images(Path(directory)):
        raw = load_grayscale(path)
        mask = None
        if masked:
            mask_path = path.with_name(path.stem + MASK_SUFFIX)
            if not mask_path.exists():
                raise FileNotFoundError(f"missing mask file {mask_path}")
            mask = load_mask_pgm(mask_path)
        if crop is not None:
            raw = _center_crop(raw, crop)
            if mask is not None:
                mask = Mask(_center_crop(Signal(mask.values), crop).values)
        if mask is not None:
            signals.append(tikhonov_highpass_masked(raw, mask, highpass_weight))
            masks.append(mask)
        else:
            signals.append(tikhonov_highpass(raw, highpass_weight))
    return signals, (masks if masked else None)


def _split_corpus(signals, masks, dims: tuple[int, int], kernel):
    spec = TileSpec(*dims)
    spec.check_boundary(kernel)
    tiles, tile_masks = [], []
    for i, s in enumerate(signals):
        parts = split_image(s, spec)
        tiles.extend(parts)
        if masks is not None:
            tile_masks.extend(
                Mask(m.values) for m in split_image(Signal(masks[i].values), spec)
            )
    return tiles, (tile_masks if masks is not None else None)


def _resolve(args, file_cfg: dict, key: str, cast, default):
    attr = "lambda_" if key == "lambda" else key.replace("-", "_")
    cli_value = getattr(args, attr, None)
    if cli_value is not None:
        return cli_value
    if key in file_cfg:
        raw = file_cfg[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        if cast is _parse_dims:
            return _parse_dims(raw)
        return cast(raw)
    return default


def cmd_train(args) -> int:
    file_cfg = read_config_file(args.config) if args.config else {}

    def get(key, cast, default):
        return _resolve(args, file_cfg, key, cast, default)

    data_dir = get("data", str, None)
    out_file = get("out", str, None)
    if data_dir is None:
        print("error: --data is required", file=sys.stderr)
        return 2
    if out_file is None:
        print("error: --out is required", file=sys.stderr)
        return 2

    algo = get("algo", str, "sgd")
    domain = get("domain", str, "spatial")
    masked = bool(args.masked) or _resolve(args, file_cfg, "masked", bool, False)
    penalty = get("lambda", float, 0.1)
    num_filters = get("filters", int, 64)
    kernel = get("kernel", _parse_dims, (12, 12))
    split = get("split", _parse_dims, None)
    crop = get("crop", _parse_dims, None)
    epochs = get("epochs", int, 1)
    seed = get("seed", int, 0)
    eval_every = get("eval-every", int, 0)
    tau0 = get("tau0", float, 0.01)
    p = get("p", float, 10.0)
    eta_fixed = get("eta-fixed", float, None)
    eta_a = get("eta-a", float, 10.0)
    eta_b = get("eta-b", float, 5.0)
    test_dir = get("test", str, None)
    log_file = get("log", str, None)
    highpass_weight = get("highpass-weight", float, 5.0)

    if eta_fixed is not None:
        schedule = StepSchedule(kind="fixed", eta0=eta_fixed)
    else:
        schedule = StepSchedule(kind="diminishing", a=eta_a, b=eta_b)
    cfg = TrainConfig(
        num_filters=num_filters,
        kernel_shape=kernel,
        penalty=penalty,
        algo=algo,
        domain=domain,
        masked=masked,
        epochs=epochs,
        seed=seed,
        schedule=schedule,
        forgetting_exponent=p,
        stop=StopRule(tau0=tau0),
        eval_every=eval_every,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        signals, masks = _load_corpus(data_dir, crop, masked, highpass_weight)
        if split is not None:
            signals, masks = _split_corpus(signals, masks, split, kernel)
        test_signals = None
        if test_dir:
            test_signals, _ = _load_corpus(test_dir, crop, False, highpass_weight)
        trainer = train_sgd if algo == "sgd" else train_surrogate
        d, records = trainer(
            signals, cfg, masks=masks, test_signals=test_signals
        )
        save_dictionary(out_file, d)
        if log_file:
            write_log_csv(log_file, records)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"trained {algo}/{domain} dictionary -> {out_file} ({len(records)} steps)")
    return 0


def cmd_eval(args) -> int:
    try:
        d = load_dictionary(args.dict)
        signals, _ = _load_corpus(args.data, args.crop, False, args.highpass_weight)
        value = test_objective(d, signals, args.lambda_)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"test objective over {len(signals)} signals: {value!r}")
    return 0


def cmd_corrupt(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    try:
        paths = _list_images(Path(args.data))
        for path in paths:
            raw = load_grayscale(path)
            corrupted, mask = salt_pepper_corrupt(raw, args.fraction, rng)
            out_img = (np.clip(corrupted.values, 0.0, 1.0) * 255).round().astype(np.uint8)
            Image.fromarray(out_img, mode="L").save(out_dir / (path.stem + ".png"))
            save_mask_pgm(out_dir / (path.stem + MASK_SUFFIX), mask)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"corrupted {len(paths)} images at fraction {args.fraction} -> {out_dir}")
    return 0


def cmd_export(args) -> int:
    try:
        d = load_dictionary(args.dict)
        save_filter_grid(args.out, d)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote filter grid for {d.num_filters} filters -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocdl", description="Online convolutional dictionary learning"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a dictionary on an image directory")
    train.add_argument("--config", help="flat key = value config file")
    train.add_argument("--algo", choices=("sgd", "surrogate"))
    train.add_argument("--domain", choices=("spatial", "frequency"))
    train.add_argument("--masked", action="store_true",
                       help="use <image>.mask.pgm weights during training")
    train.add_argument("--data", help="training image directory")
    train.add_argument("--test", help="held-out image directory")
    train.add_argument("--out", help="output dictionary file")
    train.add_argument("--lambda", type=float, dest="lambda_",
                       help="sparsity penalty (default 0.1)")
    train.add_argument("--filters", type=int, help="number of filters (default 64)")
    train.add_argument("--kernel", type=_parse_dims, help="kernel RxC (default 12x12)")
    train.add_argument("--split", type=_parse_dims, help="train on RxC tiles")
    train.add_argument("--crop", type=_parse_dims, help="center-crop images to RxC")
    train.add_argument("--p", type=float, help="forgetting exponent (default 10)")
    train.add_argument("--tau0", type=float, help="inner tolerance scale (default 0.01)")
    train.add_argument("--eta-a", type=float, help="step schedule numerator (default 10)")
    train.add_argument("--eta-b", type=float, help="step schedule offset (default 5)")
    train.add_argument("--eta-fixed", type=float, help="fixed step size")
    train.add_argument("--epochs", type=int, help="passes over the corpus (default 1)")
    train.add_argument("--seed", type=int, help="RNG seed (default 0)")
    train.add_argument("--eval-every", type=int,
                       help="test-objective cadence in steps (default never)")
    train.add_argument("--log", help="CSV log output path")
    train.add_argument("--highpass-weight", type=float,
                       help="preprocessing regularization weight (default 5.0)")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a dictionary file on a directory")
    ev.add_argument("--dict", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--lambda", type=float, default=0.1, dest="lambda_")
    ev.add_argument("--crop", type=_parse_dims, default=None)
    ev.add_argument("--highpass-weight", type=float, default=5.0)
    ev.set_defaults(func=cmd_eval)

    cor = sub.add_parser("corrupt", help="impulse-corrupt a corpus, writing masks")
    cor.add_argument("--data", required=True)
    cor.add_argument("--out", required=True)
    cor.add_argument("--fraction", type=float, required=True)
    cor.add_argument("--seed", type=int, default=0)
    cor.set_defaults(func=cmd_corrupt)

    exp = sub.add_parser("export", help="render a dictionary as a filter grid image")
    exp.add_argument("--dict", required=True)
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
