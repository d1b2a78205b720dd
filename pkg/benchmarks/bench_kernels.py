"""Compare the compiled and numpy kernel backends.

Times each hot kernel on random fields and one full decomposition iteration
at a few grid sizes, for every available backend.

    python3 benchmarks/bench_kernels.py --sizes 128 316 --repeats 5
"""

import argparse
import json
import statistics
import time

import numpy as np

from l0elastica import kernels, spectral
from l0elastica.driver import DecompParams, decompose
from l0elastica.grid import add_gaussian_noise
from l0elastica.scenes import make_scene


def _median_time(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def kernel_cases(size, seed=0):
    rng = np.random.default_rng(seed)
    p = np.ascontiguousarray(0.05 * rng.standard_normal((2, size, size)))
    lam = np.ascontiguousarray(rng.standard_normal((2, size, size)))
    div = np.ascontiguousarray(rng.standard_normal((size, size)))
    sym = spectral.build_step_four_symbols((size, size), 0.1, 0.01, 20.0, 50.0, 10.0)
    rhs = np.ascontiguousarray(spectral.dft2(rng.standard_normal((4, size, size))))
    return {
        "threshold_l0": lambda k: k.threshold_l0(p, 1e-3),
        "curvature_shrink": lambda k: k.curvature_shrink(p, div, 0.01),
        "project_s": lambda k: k.project_s(p, lam, 1.0, 1e-6, 50),
        "apply_blocks": lambda k: k.apply_blocks(sym.inv, rhs),
    }


def run(sizes, repeats, iters):
    rows = []
    f_cache = {}
    for size in sizes:
        cases = kernel_cases(size)
        for backend in kernels.available_backends():
            impl = kernels.get_backend(backend)
            row = {"size": size, "backend": backend}
            for name, case in cases.items():
                case(impl)  # warm-up
                row[name] = _median_time(lambda: case(impl), repeats)
            previous = kernels.use_backend(backend)
            try:
                f = f_cache.setdefault(size, add_gaussian_noise(make_scene("cross-light", size), 20 / 255, seed=0))
                params = DecompParams(iter_max=iters, pad_width=0, rho=1e-300)
                row["iteration"] = statistics.median(decompose(f, params).loop_elapsed / iters for _ in range(repeats))
            finally:
                kernels.use_backend(previous)
            rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 316])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--iters", type=int, default=5, help="iterations per full-scheme timing")
    ap.add_argument("--json", dest="json_out", default=None)
    args = ap.parse_args()

    rows = run(args.sizes, args.repeats, args.iters)
    cols = ["threshold_l0", "curvature_shrink", "project_s", "apply_blocks", "iteration"]
    print(f"{'size':>5} {'backend':>8} " + " ".join(f"{c:>17}" for c in cols) + "   (ms, median)")
    for row in rows:
        print(f"{row['size']:>5} {row['backend']:>8} " + " ".join(f"{1e3 * row[c]:>17.3f}" for c in cols))
    by_key = {(r["size"], r["backend"]): r for r in rows}
    for size in args.sizes:
        if (size, "cython") in by_key and (size, "python") in by_key:
            fast, slow = by_key[(size, "cython")], by_key[(size, "python")]
            ratios = " ".join(f"{c}={slow[c] / fast[c]:.1f}x" for c in cols)
            print(f"speed-up at {size}: {ratios}")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
