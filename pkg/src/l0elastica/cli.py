"""Command-line entry point: ``l0elastica {decompose,synth,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import statistics
import sys
import tempfile

import numpy as np

from . import __version__, grid, kernels
from .driver import DecompParams, DivergenceError, ModelVariant, decompose, preset_alpha_n
from .imageio import ImageFormatError, read_image, write_png
from .scenes import SCENES, make_scene

EXIT_OK = 0
EXIT_IO = 2
EXIT_DIVERGED = 3

# w and n are signed; unscaled files store x + DISPLAY_OFFSET clamped to [0, 1]
DISPLAY_OFFSET = 0.5

METRICS_KEYS = (
    "psnr_noisy_input",
    "psnr_u",
    "std_n",
    "iterations",
    "converged",
    "elapsed_seconds",
    "residual_final",
    "display_offset",
    "noise_sigma",
    "seed",
    "params",
)

OUTPUT_FILES = ("v.png", "w.png", "n.png", "u.png", "v_scaled.png", "w_scaled.png", "n_scaled.png", "metrics.json")

log = logging.getLogger("l0elastica")


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    d = DecompParams()
    g = p.add_argument_group("model parameters")
    g.add_argument("--alpha0", type=float, default=d.alpha0, help="L0 gradient weight (default %(default)s)")
    g.add_argument("--alpha-curv", type=float, default=d.alpha_curv, help="curvature weight (default %(default)s)")
    g.add_argument("--alpha-w", type=float, default=d.alpha_w, help="smooth-part weight (default %(default)s)")
    g.add_argument("--alpha-n", type=float, default=d.alpha_n, help="H^-1 weight (default %(default)s)")
    g.add_argument("--alpha-n-auto", action="store_true",
                   help="pick alpha_n from --noise-sigma (requires it)")
    g.add_argument("--tau", type=float, default=d.tau, help="time step (default %(default)s)")
    g.add_argument("--rho", type=float, default=d.rho, help="stopping threshold (default %(default)s)")
    g.add_argument("--max-iters", type=int, default=d.iter_max, help="iteration cap (default %(default)s)")
    g.add_argument("--variant", choices=[v.value for v in ModelVariant], default=d.variant.value)
    g.add_argument("--pad", type=int, default=d.pad_width, help="symmetric pad width (default %(default)s)")
    g.add_argument("--lambda-init", choices=("normal", "zero"), default=d.lambda_init,
                   help="initial normal field (default %(default)s)")


def _params_from_args(args) -> DecompParams:
    alpha_n = args.alpha_n
    if args.alpha_n_auto:
        alpha_n = preset_alpha_n(args.noise_sigma)
    return DecompParams(
        alpha0=args.alpha0, alpha_curv=args.alpha_curv, alpha_w=args.alpha_w, alpha_n=alpha_n,
        tau=args.tau, rho=args.rho, iter_max=args.max_iters, variant=args.variant,
        pad_width=args.pad, lambda_init=args.lambda_init,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l0elastica",
        description="Split a grayscale image into structure, smooth and oscillatory parts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--backend", choices=kernels.BACKENDS, default=None,
                        help="kernel backend (default: compiled when available)")
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="decompose an image and write the components")
    dec.add_argument("input", help="grayscale PNG (8/16-bit) or binary PGM")
    dec.add_argument("--out-dir", required=True, help="directory for the output files")
    dec.add_argument("--clean-ref", default=None, help="clean reference image for PSNR")
    dec.add_argument("--noise-sigma", type=float, default=0.0,
                     help="add Gaussian noise of this std (in 1/255 units) to the input first")
    dec.add_argument("--seed", type=int, default=0, help="noise seed (default %(default)s)")
    dec.add_argument("--8bit", dest="eight_bit", action="store_true", help="write 8-bit PNGs (default 16-bit)")
    _add_param_flags(dec)

    syn = sub.add_parser("synth", help="write a synthetic test scene")
    syn.add_argument("scene", choices=sorted(SCENES))
    syn.add_argument("--size", type=int, default=256)
    syn.add_argument("--out", required=True, help="output PNG path")
    syn.add_argument("--8bit", dest="eight_bit", action="store_true")

    bench = sub.add_parser("bench", help="time one iteration against the grid size")
    bench.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    bench.add_argument("--iters", type=int, default=10, help="iterations per timed run")
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--json", dest="json_out", default=None, help="also write the table as JSON here")
    return parser


def _write_outputs(out_dir: str, result, bits: int) -> None:
    write_png(os.path.join(out_dir, "v.png"), result.v, bits)
    write_png(os.path.join(out_dir, "w.png"), result.w + DISPLAY_OFFSET, bits)
    write_png(os.path.join(out_dir, "n.png"), result.n + DISPLAY_OFFSET, bits)
    write_png(os.path.join(out_dir, "u.png"), result.u, bits)
    for name in ("v", "w", "n"):
        write_png(os.path.join(out_dir, f"{name}_scaled.png"), grid.linear_scale01(getattr(result, name)), bits)


def metrics_report(result, params: DecompParams, f_noisy, reference, noise_sigma, seed) -> dict:
    psnr_in = psnr_u = None
    if reference is not None:
        psnr_in = _finite_or_none(grid.psnr(reference, f_noisy))
        psnr_u = _finite_or_none(grid.psnr(reference, np.clip(result.u, 0.0, 1.0)))
    report = {
        "psnr_noisy_input": psnr_in,
        "psnr_u": psnr_u,
        "std_n": float(grid.stddev(result.n)),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "elapsed_seconds": float(result.elapsed),
        "residual_final": _finite_or_none(result.residual_final),
        "display_offset": {"v": 0.0, "w": DISPLAY_OFFSET, "n": DISPLAY_OFFSET, "u": 0.0},
        "noise_sigma": float(noise_sigma),
        "seed": int(seed),
        "params": params.to_dict(),
    }
    assert tuple(report) == METRICS_KEYS
    return report


def cmd_decompose(args, parser) -> int:
    if args.alpha_n_auto and args.noise_sigma <= 0:
        parser.error("--alpha-n-auto needs a positive --noise-sigma")
    if args.noise_sigma < 0:
        parser.error("--noise-sigma must be non-negative")
    try:
        params = _params_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))

    try:
        f = read_image(args.input)
        clean = read_image(args.clean_ref) if args.clean_ref else None
    except ImageFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if clean is not None and clean.shape != f.shape:
        print(f"error: reference shape {clean.shape} differs from input {f.shape}", file=sys.stderr)
        return EXIT_IO

    reference = clean
    if args.noise_sigma > 0:
        if reference is None:
            reference = f
        f = grid.add_gaussian_noise(f, args.noise_sigma / 255.0, seed=args.seed)

    try:
        result = decompose(f, params)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    report = metrics_report(result, params, f, reference, args.noise_sigma, args.seed)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        _write_outputs(args.out_dir, result, 8 if args.eight_bit else 16)
        # write-then-rename so a reader never sees a truncated metrics file
        fd, tmp = tempfile.mkstemp(dir=args.out_dir, suffix=".json")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=False, allow_nan=False)
            fh.write("\n")
        os.replace(tmp, os.path.join(args.out_dir, "metrics.json"))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({k: report[k] for k in ("psnr_noisy_input", "psnr_u", "std_n", "iterations")}))
    return EXIT_OK


def cmd_synth(args, parser) -> int:
    try:
        img = make_scene(args.scene, args.size)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        write_png(args.out, img, 8 if args.eight_bit else 16)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def fit_exponent(sizes, times) -> float:
    """Least-squares slope of log(time) against log(M*N) for square grids."""
    x = np.log(np.asarray(sizes, dtype=float) ** 2)
    y = np.log(np.asarray(times, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def run_bench(sizes, iters: int = 10, repeats: int = 3, seed: int = 0) -> dict:
    """Median per-iteration wall time of the full scheme for each square size."""
    rows = []
    for size in sizes:
        f = grid.add_gaussian_noise(make_scene("cross-light", size), 20.0 / 255.0, seed=seed)
        # rho far below reach so every run does exactly ``iters`` iterations
        params = DecompParams(iter_max=iters, pad_width=0, rho=1e-300)
        decompose(f, DecompParams(iter_max=1, pad_width=0))  # warm-up
        per_iter = [decompose(f, params).loop_elapsed / iters for _ in range(repeats)]
        rows.append({"size": int(size), "seconds_per_iter": statistics.median(per_iter), "samples": per_iter})
    exponent = fit_exponent([r["size"] for r in rows], [r["seconds_per_iter"] for r in rows]) if len(rows) > 1 else None
    return {"backend": kernels.backend_name(), "iters": iters, "repeats": repeats, "rows": rows,
            "fitted_exponent": exponent}


def cmd_bench(args, parser) -> int:
    for s in args.sizes:
        if s < 64 or s & (s - 1):
            parser.error(f"sizes must be powers of two >= 64, got {s}")
    if args.iters < 1 or args.repeats < 1:
        parser.error("--iters and --repeats must be at least 1")
    table = run_bench(args.sizes, args.iters, args.repeats)
    print(f"{'size':>6} {'ms/iter':>10}")
    for row in table["rows"]:
        print(f"{row['size']:>6} {1e3 * row['seconds_per_iter']:>10.2f}")
    if table["fitted_exponent"] is not None:
        print(f"fitted exponent vs MN: {table['fitted_exponent']:.3f}")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.backend:
        try:
            kernels.use_backend(args.backend)
        except RuntimeError as exc:
            parser.error(str(exc))
    handlers = {"decompose": cmd_decompose, "synth": cmd_synth, "bench": cmd_bench}
    return handlers[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
