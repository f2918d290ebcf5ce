"""Command-line entry point.

Every subcommand prints a single JSON line on stdout with a fixed key set,
sends diagnostics to stderr, and exits 0 on success, 1 on usage errors, and
2 on data errors. Each accepts ``--config FILE`` with key=value lines whose
keys are the subcommand's long flag names; explicit flags win over config
values. ``PATHSSL_THREADS`` caps internal worker counts without changing
any result.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import formats, posenc, probe, regularizers, tiling, views

ENV_THREADS = "PATHSSL_THREADS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse hook
        raise _UsageError(message)


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'low,high', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'H,W', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _path_pair(text: str) -> tuple[str, str]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'embeddings,labels', got {text!r}")
    return parts[0], parts[1]


def thread_cap() -> int:
    """Worker limit from PATHSSL_THREADS; results never depend on it."""
    raw = os.environ.get(ENV_THREADS)
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        print(f"ignoring non-integer {ENV_THREADS}={raw!r}", file=sys.stderr)
        return 1
    return max(1, cap)


def _load_image(path: str) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def _save_image(path: Path, pixels: np.ndarray) -> None:
    data = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(path, format="PNG")


def _cmd_tile(ns: argparse.Namespace) -> dict:
    pixels = _load_image(ns.input)
    slide = tiling.SlideImage(pixels=pixels, mpp=ns.mpp)
    thresholds = tiling.HsvThresholds(
        h_range=ns.h_range, s_range=ns.s_range, v_range=ns.v_range
    )
    tiles = tiling.extract_tiles(slide, ns.size, thresholds, ns.min_coverage)

    lines = [
        f"{tile.origin[0]},{tile.origin[1]},{tile.size},{tile.mpp},{tile.coverage}"
        for tile in tiles
    ]
    Path(ns.manifest).write_text("".join(line + "\n" for line in lines))

    tiles_dir = None
    if ns.tiles_dir is not None:
        out_dir = Path(ns.tiles_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for tile in tiles:
            x, y = tile.origin
            _save_image(out_dir / f"tile_x{x:06d}_y{y:06d}.png", tile.pixels)
        tiles_dir = str(out_dir)

    return {
        "accepted": len(tiles),
        "grid": [slide.width // ns.size, slide.height // ns.size],
        "tile_size": ns.size,
        "mpp": ns.mpp,
        "manifest": ns.manifest,
        "tiles_dir": tiles_dir,
    }


def _preview_policy(ns: argparse.Namespace, source_size: int) -> views.ViewPolicy:
    if ns.mode == "ect":
        scale = ns.scale if ns.scale is not None else views.ECT_SCALE
        aspect = ns.aspect if ns.aspect is not None else views.ECT_ASPECT
        return views.ViewPolicy(source_size, ns.out, scale, aspect, views.ECT)
    scale = ns.scale if ns.scale is not None else views.DINOV2_GLOBAL_SCALE
    aspect = ns.aspect if ns.aspect is not None else views.DINOV2_ASPECT
    return views.ViewPolicy(source_size, ns.out, scale, aspect, views.CROP_RESIZE)


def _cmd_augment_preview(ns: argparse.Namespace) -> dict:
    pixels = _load_image(ns.input)
    height, width = pixels.shape[0], pixels.shape[1]
    if height != width:
        raise ValueError(f"input must be square, got {width}x{height}")
    policy = _preview_policy(ns, source_size=width)
    pair = views.sample_view_pair(ns.seed, policy)

    out_dir = Path(ns.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(ns.input).stem
    paths = []
    for index, params in enumerate(pair):
        view = views.apply_crop(pixels, params)
        path = out_dir / f"{stem}_view{index}.png"
        _save_image(path, view)
        paths.append(str(path))

    return {
        "views": paths,
        "params": [[p.x, p.y, p.w, p.h, p.out] for p in pair],
        "mode": ns.mode,
        "seed": ns.seed,
    }


def _cmd_iou_sim(ns: argparse.Namespace) -> dict:
    mode = views.ECT if ns.mode == "ect" else views.CROP_RESIZE
    policy = views.ViewPolicy(ns.source, ns.out, ns.scale, ns.aspect, mode)
    est = views.estimate_mean_iou(policy, ns.trials, ns.seed, workers=thread_cap())
    return {"mean": est.mean, "stderr": est.stderr, "trials": est.trials}


def _cmd_reg_eval(ns: argparse.Namespace) -> dict:
    batch = formats.load_embeddings(ns.input)
    if not batch.normalized:
        batch = regularizers.normalize_to_sphere(batch)
    cfg = regularizers.KernelConfig(kappa=ns.kappa)

    if ns.estimator == "koleo":
        value = regularizers.koleo_entropy(batch)
        grad = regularizers.koleo_grad(batch) if ns.grad else None
    else:
        value = regularizers.kde_entropy(batch, cfg)
        grad = regularizers.kde_grad(batch, cfg) if ns.grad else None

    if grad is not None:
        formats.save_embeddings(ns.grad, grad)

    return {"value": value, "n": batch.n, "dim": batch.dim}


def _cmd_posenc(ns: argparse.Namespace) -> dict:
    grid_h, grid_w = ns.grid
    if ns.mode == "csd":
        cfg = posenc.CsdConfig(dim=ns.dim, omega=ns.omega, ref_mpp=ns.ref_mpp)
        values = posenc.csd_grid(grid_h, grid_w, ns.mpp, cfg).values
    else:
        table = posenc.lpm_init(ns.mags, grid_h, grid_w, ns.dim, ns.seed, ns.init_std)
        values = posenc.lpm_lookup(table, ns.mpp)
    formats.save_embeddings(ns.output, values.reshape(grid_h * grid_w, ns.dim))
    return {
        "mode": ns.mode,
        "grid": [grid_h, grid_w],
        "dim": ns.dim,
        "mpp": ns.mpp,
        "output": ns.output,
    }


def _load_labeled(spec: tuple[str, str]) -> probe.LabeledEmbeddings:
    emb_path, labels_path = spec
    batch = formats.load_embeddings(emb_path)
    lines = [line for line in Path(labels_path).read_text().splitlines() if line.strip()]
    try:
        labels = np.array([int(line) for line in lines], dtype=np.int64)
    except ValueError:
        raise ValueError(f"labels file {labels_path} must hold one integer per line")
    if labels.shape[0] != batch.n:
        raise ValueError(
            f"label count {labels.shape[0]} does not match embedding rows {batch.n}"
        )
    return probe.LabeledEmbeddings(embeddings=batch.data, labels=labels)


def _cmd_probe(ns: argparse.Namespace) -> dict:
    train_set = _load_labeled(ns.train)
    test_set = _load_labeled(ns.test)
    cfg = probe.ProbeConfig(
        iterations=ns.iters,
        base_lr=ns.base_lr,
        final_lr=ns.final_lr,
        momentum=ns.momentum,
        batch_size=min(ns.batch_size, train_set.n),
        rng_seed=ns.seed,
    )
    model = probe.train_linear_probe(train_set, cfg)
    accuracy = probe.evaluate_accuracy(model, test_set)
    return {"test_accuracy": accuracy, "train_loss_final": model.final_train_loss}


def build_parser() -> _Parser:
    parser = _Parser(prog="pathssl", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, handler, help_text: str) -> _Parser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--config", default=None, help="key=value defaults file")
        return p

    p = add("tile", _cmd_tile, "extract tissue tiles from a PNG slide image")
    p.add_argument("--input", required=True, help="input PNG image")
    p.add_argument("--mpp", type=float, required=True, help="microns per pixel")
    p.add_argument("--size", type=int, default=224, help="tile side length")
    p.add_argument("--min-coverage", type=float, default=tiling.DEFAULT_MIN_COVERAGE)
    p.add_argument("--h-range", type=_pair, default=(90, 180))
    p.add_argument("--s-range", type=_pair, default=(8, 255))
    p.add_argument("--v-range", type=_pair, default=(103, 255))
    p.add_argument("--manifest", required=True, help="output manifest path")
    p.add_argument("--tiles-dir", default=None, help="directory for accepted tile PNGs")

    p = add("augment-preview", _cmd_augment_preview, "write the two sampled views of a PNG")
    p.add_argument("--input", required=True, help="square input PNG")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--mode", choices=["crop", "ect"], default="ect")
    p.add_argument("--out", type=int, default=224, help="output side length")
    p.add_argument("--scale", type=_pair, default=None, help="defaults per mode")
    p.add_argument("--aspect", type=_pair, default=None, help="defaults per mode")
    p.add_argument("--seed", type=int, default=0)

    p = add("iou-sim", _cmd_iou_sim, "Monte Carlo mean IoU of sampled view pairs")
    p.add_argument("--mode", choices=["crop", "ect"], required=True)
    p.add_argument("--source", type=int, required=True, help="source window side")
    p.add_argument("--out", type=int, required=True, help="output side length")
    p.add_argument("--scale", type=_pair, required=True)
    p.add_argument("--aspect", type=_pair, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = add("reg-eval", _cmd_reg_eval, "evaluate an entropy regularizer on an EMB1 file")
    p.add_argument("--input", required=True, help="EMB1 embedding file")
    p.add_argument("--estimator", choices=["koleo", "kde"], required=True)
    p.add_argument("--kappa", type=float, default=5.0)
    p.add_argument("--grad", default=None, help="write the gradient as EMB1 here")

    p = add("posenc", _cmd_posenc, "generate a position-encoding grid as EMB1")
    p.add_argument("--mode", choices=["csd", "lpm"], required=True)
    p.add_argument("--grid", type=_int_pair, required=True, help="H,W")
    p.add_argument("--mpp", type=float, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--ref-mpp", type=float, default=posenc.DEFAULT_REF_MPP)
    p.add_argument("--omega", type=float, default=posenc.DEFAULT_OMEGA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mags", type=_float_list, default=[2.0, 1.0, 0.5, 0.25])
    p.add_argument("--init-std", type=float, default=posenc.DEFAULT_INIT_STD)
    p.add_argument("--output", required=True)

    p = add("probe", _cmd_probe, "train and score a linear probe on frozen embeddings")
    p.add_argument("--train", type=_path_pair, required=True, help="emb.bin,labels.txt")
    p.add_argument("--test", type=_path_pair, required=True, help="emb.bin,labels.txt")
    p.add_argument("--iters", type=int, default=12500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-lr", type=float, default=0.01)
    p.add_argument("--final-lr", type=float, default=0.0)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=256)

    return parser


def _config_keys(parser: _Parser, command: str) -> set[str]:
    actions = None
    for action in parser._actions:  # noqa: SLF001 - argparse keeps these stable
        if isinstance(action, argparse._SubParsersAction):
            actions = action.choices[command]._actions
    keys = set()
    for action in actions or []:
        for option in action.option_strings:
            if option.startswith("--") and option not in ("--config", "--help"):
                keys.add(option[2:])
    return keys


def _scan_config_path(argv: list[str]) -> str | None:
    path = None
    for index, token in enumerate(argv):
        if token == "--config" and index + 1 < len(argv):
            path = argv[index + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    return path


def _expand_config(parser: _Parser, argv: list[str]) -> list[str]:
    """Inject config-file pairs as flags ahead of the user's flags."""
    config_path = _scan_config_path(argv)
    if config_path is None or not argv or argv[0].startswith("-"):
        return argv
    command = argv[0]
    keys = _config_keys(parser, command)
    if not keys:
        return argv
    text = Path(config_path).read_text()
    pairs = formats.parse_run_config(text, keys)
    injected: list[str] = []
    for key, value in pairs.items():
        injected.extend([f"--{key}", value])
    return [command, *injected, *argv[1:]]


def dispatch(argv: list[str]) -> int:
    """Route argv to a subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        if not argv:
            raise _UsageError("a subcommand is required")
        expanded = _expand_config(parser, argv)
        ns = parser.parse_args(expanded)
        if not hasattr(ns, "handler"):
            raise _UsageError(f"unknown subcommand {argv[0]!r}")
        payload = ns.handler(ns)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pathssl: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"pathssl: data error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(payload))
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
