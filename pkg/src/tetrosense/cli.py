"""Command-line interface: ``tetrosense <command> [options]``.

Commands
--------
layout validate|gen|show   check, generate or draw sensor layouts
coherence                  mutual coherence and Welch bound as a CSV row
run                        simulate acquisition and reconstruct one image
evaluate                   run a layout x method cross product over a folder
chart                      write a synthetic resolution chart

Any long option can also be given in a ``--config`` file of ``key = value``
lines (``#`` starts a comment, keys use the option name without dashes, with
``-`` or ``_``).  Options given on the command line win over the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .analysis import TransformBasis, TransformKind, coherence
from .errors import TetrosenseError
from .icegraph import generate_geared
from .imagecore import (ChartKind, ChartSpec, center_crop, crop_divisible, list_images,
                        load_image, make_chart, save_image)
from .metrics import DEFAULT_BORDER, evaluate as evaluate_metrics
from .reconstruct import SplConfig, get_solver, reconstruct
from .sensing import BORDER_POLICIES, build_operator, measure, write_measurements
from .tiling import (BUILTIN_LAYOUTS, all_group_index, format_layout, get_layout, parse_layout,
                     validate_layout, write_layout)

RESULT_HEADER = ("image_id", "layout", "method", "psnr_db", "ssim", "iterations", "residual", "seconds")
SPL_OPTIONS = ("target", "window", "wiener", "wiener_noise", "max_iters", "tol", "lambda0", "decay")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{float(v):.6f}"


def _size(text: str) -> tuple[int, int]:
    try:
        m, n = text.lower().split("x")
        m, n = int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 30x30, got {text!r}")
    if m <= 0 or n <= 0:
        raise argparse.ArgumentTypeError("size must be positive")
    return m, n


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def read_config(path) -> dict:
    """Parse a ``key = value`` config file into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise TetrosenseError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


# ------------------------------------------------------------------ commands

def cmd_layout_validate(args) -> int:
    target = args.layout
    path = Path(target)
    if target in BUILTIN_LAYOUTS:
        layout = get_layout(target)
    elif path.is_file():
        layout = parse_layout(path.read_text(encoding="utf-8"), name=path.stem)
    else:
        raise TetrosenseError(f"layout file not found: {target}")
    report = validate_layout(layout)
    print(f"layout: {layout.name}")
    print(report)
    return 0 if report.ok else 1


def cmd_layout_gen(args) -> int:
    layout = generate_geared(args.cell, args.seed, args.max_tries)
    report = validate_layout(layout)
    if not report.ok:
        raise TetrosenseError("generated layout failed validation: " + report.errors[0])
    header = f"geared {args.cell}x{args.cell} T-tetromino layout, random search seed {args.seed}"
    if args.out:
        write_layout(layout, args.out, header=header)
        print(f"wrote {args.out}")
    else:
        print(f"# {header}")
        print(format_layout(layout), end="")
    return 0


def _palette(n: int) -> np.ndarray:
    """``n`` well separated RGB colors (golden-angle hues)."""
    h = (np.arange(n) * 0.618033988749895) % 1.0
    s, v = 0.55, 0.95
    i = np.floor(h * 6).astype(int) % 6
    f = h * 6 - np.floor(h * 6)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    table = np.stack([
        np.choose(i, [v, q, p, p, t, v]),
        np.choose(i, [t, v, v, q, p, p]),
        np.choose(i, [p, p, t, v, v, q]),
    ], axis=1)
    return np.rint(table * 255).astype(np.uint8)


def render_layout(layout, reps: int = 2, scale: int = 24) -> np.ndarray:
    """RGB diagram of ``reps x reps`` replicas; groups colored by index, group borders dark."""
    idx = np.tile(all_group_index(layout), (reps, reps))
    rgb = _palette(layout.n_groups)[idx]
    big = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    line = np.array([40, 40, 40], dtype=np.uint8)
    H, W = idx.shape
    # vertical borders between horizontally adjacent pixels of different groups
    for r in range(H):
        for c in range(W):
            if idx[r, c] != idx[r, (c + 1) % W]:
                big[r * scale:(r + 1) * scale, (c + 1) * scale - 1] = line
                if c + 1 < W:
                    big[r * scale:(r + 1) * scale, (c + 1) * scale] = line
            if idx[r, c] != idx[(r + 1) % H, c]:
                big[(r + 1) * scale - 1, c * scale:(c + 1) * scale] = line
                if r + 1 < H:
                    big[(r + 1) * scale, c * scale:(c + 1) * scale] = line
    big[:, 0] = big[:, -1] = line
    big[0] = big[-1] = line
    return big


def cmd_layout_show(args) -> int:
    layout = get_layout(args.layout)
    report = validate_layout(layout)
    if not report.ok:
        print(report, file=sys.stderr)
        return 1
    out = Path(args.out or f"{layout.name}.png")
    Image.fromarray(render_layout(layout, args.reps, args.scale), mode="RGB").save(out, format="PNG")
    print(f"wrote {out}")
    if args.export:
        write_layout(layout, args.export, header=f"{layout.name} ({layout.shape_class.value})")
        print(f"wrote {args.export}")
    return 0


def cmd_coherence(args) -> int:
    layout = get_layout(args.layout)
    M, N = args.size
    op = build_operator(layout, M, N, border=args.border)
    rep = coherence(op, TransformBasis(TransformKind(args.transform), M, N))
    print(rep.CSV_HEADER)
    print(rep.csv_row())
    return 0


def _spl_config(args) -> SplConfig:
    values = {k: getattr(args, "spl_" + k) for k in SPL_OPTIONS if getattr(args, "spl_" + k, None) is not None}
    return SplConfig.from_mapping(values)


def run_pipeline(img, layout, method: str, cfg: SplConfig | None, image_id: str,
                 border: int = DEFAULT_BORDER, out_dir=None) -> dict:
    """crop_divisible -> measure -> reconstruct -> metrics for one image."""
    ref = crop_divisible(img, layout.cell)
    op = build_operator(layout, *ref.shape)
    y = measure(op, ref)
    t0 = time.perf_counter()
    rec = reconstruct(op, y, method, cfg)
    seconds = time.perf_counter() - t0
    report = evaluate_metrics(ref, rec.image, border)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{image_id}_{layout.name}_{method}"
        save_image(rec.image, out_dir / f"{stem}.png")
        write_measurements(out_dir / f"{stem}.meas", op, y)
    return {
        "image_id": image_id,
        "layout": layout.name,
        "method": method,
        "psnr_db": report.psnr_db,
        "ssim": report.ssim,
        "iterations": rec.iterations_used,
        "residual": rec.residual,
        "seconds": seconds,
    }


def format_row(row: dict) -> list[str]:
    return [row[k] if isinstance(row[k], str) else _fmt(row[k]) for k in RESULT_HEADER]


def _write_rows(path, rows, append=False):
    path = Path(path)
    new = not (append and path.exists() and path.stat().st_size > 0)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(RESULT_HEADER)
        for row in rows:
            w.writerow(format_row(row))


def _rows_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for row in rows:
        w.writerow(format_row(row))
    return buf.getvalue()


def cmd_run(args) -> int:
    path = Path(args.image)
    if not path.is_file():
        raise TetrosenseError(f"image not found: {path}")
    layout = get_layout(args.layout)
    row = run_pipeline(load_image(path), layout, args.method, _spl_config(args),
                       path.stem, args.border, args.out)
    _write_rows(Path(args.out) / "results.csv", [row], append=True)
    sys.stdout.write(_rows_text([row]))
    return 0


def _evaluate_job(job):
    path, layout_spec, method, cfg, crop, border = job
    img = load_image(path)
    if crop:
        img = center_crop(img, crop, crop)
    return run_pipeline(img, get_layout(layout_spec), method, cfg, Path(path).stem, border)


def mean_rows(rows) -> list[dict]:
    """One ``image_id = mean`` row per (layout, method), in first-seen order."""
    groups = {}
    for row in rows:
        groups.setdefault((row["layout"], row["method"]), []).append(row)
    out = []
    for (layout, method), items in groups.items():
        mean = {"image_id": "mean", "layout": layout, "method": method}
        for key in ("psnr_db", "ssim", "iterations", "residual", "seconds"):
            mean[key] = float(np.mean([float(r[key]) for r in items]))
        out.append(mean)
    return out


def cmd_evaluate(args) -> int:
    images = list_images(args.dataset)
    if not images:
        raise TetrosenseError(f"no PNG/PGM images in {args.dataset}")
    cfg = _spl_config(args)
    jobs = []
    for spec in args.layouts:
        layout = get_layout(spec)
        for method in args.methods:
            solver = get_solver(method)
            if layout.shape_class not in solver.layouts or (method == "bicubic" and layout.cell != 2):
                print(f"skipping unsupported combination {layout.name} + {method}", file=sys.stderr)
                continue
            jobs.extend((str(p), spec, method, cfg, args.crop, args.border) for p in images)
    if not jobs:
        raise TetrosenseError("no supported layout/method combination requested")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_evaluate_job, jobs))
    else:
        rows = [_evaluate_job(j) for j in jobs]
    means = mean_rows(rows)
    _write_rows(args.out, rows + means)
    sys.stdout.write(_rows_text(means))
    print(f"wrote {args.out} ({len(rows) + len(means)} rows)")
    return 0


def cmd_chart(args) -> int:
    spec = ChartSpec(ChartKind(args.kind), args.period, args.orientation, args.contrast)
    save_image(make_chart(spec, *args.size), args.out)
    print(f"wrote {args.out}")
    return 0


# -------------------------------------------------------------------- parser

def _add_spl_options(p):
    g = p.add_argument_group("SPL settings")
    g.add_argument("--spl-target", type=int, help="target block side (default 16)")
    g.add_argument("--spl-window", type=int, help="model window side (default 32)")
    g.add_argument("--spl-wiener", type=int, help="Wiener kernel side (default 3)")
    g.add_argument("--spl-wiener-noise", type=float, help="Wiener noise floor (default 1e-3)")
    g.add_argument("--spl-max-iters", type=int, help="iteration cap (default 200)")
    g.add_argument("--spl-tol", type=float, help="relative-change stop (default 1e-4)")
    g.add_argument("--spl-lambda0", type=float, help="initial DCT threshold (default 0.05)")
    g.add_argument("--spl-decay", type=float, help="threshold decay per iteration (default 0.95)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tetrosense", description="Tetromino pixel binning simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value file supplying default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    lay = sub.add_parser("layout", help="validate, generate or draw layouts")
    lsub = lay.add_subparsers(dest="action", required=True)
    p = lsub.add_parser("validate", help="check a layout file or built-in id")
    p.add_argument("layout")
    p.set_defaults(func=cmd_layout_validate)
    p = lsub.add_parser("gen", help="random search for a geared T layout")
    p.add_argument("--cell", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-tries", type=int, default=131072)
    p.add_argument("--out", help="layout file to write (default: standard output)")
    p.set_defaults(func=cmd_layout_gen)
    p = lsub.add_parser("show", help="draw a layout as a PNG diagram")
    p.add_argument("layout")
    p.add_argument("--out", help="PNG path (default <layout>.png)")
    p.add_argument("--reps", type=int, default=2, help="cell replicas per side")
    p.add_argument("--scale", type=int, default=24, help="diagram pixels per sensor pixel")
    p.add_argument("--export", help="also write the layout file here")
    p.set_defaults(func=cmd_layout_show)

    p = sub.add_parser("coherence", help="mutual coherence of a layout")
    p.add_argument("--layout", default="square2x2")
    p.add_argument("--size", type=_size, default=(30, 30))
    p.add_argument("--transform", choices=[t.value for t in TransformKind], default="dft")
    p.add_argument("--border", choices=BORDER_POLICIES, default="periodic")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("run", help="simulate and reconstruct one image")
    p.add_argument("--image", required=True)
    p.add_argument("--layout", default="t4x4")
    p.add_argument("--method", default="spl")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--border", type=int, default=DEFAULT_BORDER, help="metric border in pixels")
    _add_spl_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="evaluate layouts and methods on an image folder")
    p.add_argument("--dataset", required=True)
    p.add_argument("--layouts", type=_csv_list, default=["t4x4", "geared8x8", "galdo6x6"])
    p.add_argument("--methods", type=_csv_list, default=["spl"])
    p.add_argument("--out", required=True, help="CSV file to write")
    p.add_argument("--crop", type=int, default=0, help="center-crop images to this side first")
    p.add_argument("--border", type=int, default=DEFAULT_BORDER, help="metric border in pixels")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_spl_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("chart", help="write a synthetic test chart")
    p.add_argument("--kind", choices=[k.value for k in ChartKind], default="fine-lines")
    p.add_argument("--period", type=float, default=2.0)
    p.add_argument("--orientation", type=float, default=0.0)
    p.add_argument("--contrast", type=float, default=1.0)
    p.add_argument("--size", type=_size, default=(128, 128))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_chart)
    return parser


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                yield sp
                yield from _subparsers(sp)


def _apply_config(parser, values: dict) -> None:
    """Install config values as defaults wherever an option of that name exists."""
    used = set()
    for p in [parser, *_subparsers(parser)]:
        known = {a.dest: a for a in p._actions}
        update = {}
        for key, raw in values.items():
            action = known.get(key)
            if action is None or not action.option_strings or key == "config":
                continue
            update[key] = action.type(raw) if action.type else raw
            if action.choices is not None and update[key] not in action.choices:
                raise TetrosenseError(f"config: invalid value {raw!r} for {key}")
            action.required = False
            used.add(key)
        if update:
            p.set_defaults(**update)
    unknown = sorted(set(values) - used)
    if unknown:
        raise TetrosenseError(f"config: unknown option(s) {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    try:
        known, rest = pre.parse_known_args(argv)
        if known.config:
            _apply_config(parser, read_config(known.config))
        args = parser.parse_args(rest)
        return args.func(args)
    except (TetrosenseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
