#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Runs each hot kernel on a 1024x1024 tile (the production tile size) plus the
full restaining pipeline, and prints per-kernel timings for both backends.

    python3 benchmarks/bench_backends.py [--size 1024] [--repeats 5]
"""

import argparse
import time

import numpy as np

from restain import _kernels_np, backend
from restain.color import RgbTile, linear_transfer
from restain.profiles import builtin_profile


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=1024)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not backend.HAVE_COMPILED:
        print("compiled kernels not available; build the extension first")
        return

    from restain import _kernels

    # realistic workload: a synthetic tile (mostly background, stained cells)
    from restain.color import rgb_to_od
    from restain.synth import generate_tile

    profile = builtin_profile("her2-default")
    cells = max(4, (args.size // 128) ** 2 * 12)
    st = generate_tile(0, args.size, profile, cells)
    pixels = np.asarray(st.tile.pixels)
    od = rgb_to_od(st.tile).values
    conc = st.truth_c.values
    white = np.array([255.0, 255.0, 255.0])
    lut = backend.density_lut(white)
    m = profile.stain_matrix.columns
    pinv = np.linalg.pinv(m)

    kernels = {
        "od_from_rgb": (
            lambda k: k.od_from_rgb(pixels, lut),
        ),
        "rgb_from_od": (
            lambda k: k.rgb_from_od(od, white, backend.DELTA),
        ),
        "unmix": (
            lambda k: k.unmix(od, pinv),
        ),
        "mix": (
            lambda k: k.mix(conc, m),
        ),
    }

    print(f"tile {args.size}x{args.size}, best of {args.repeats}\n")
    print(f"{'kernel':<14} {'compiled':>12} {'numpy':>12} {'speedup':>9}")
    for name, (call,) in kernels.items():
        t_c = best_of(lambda: call(_kernels), args.repeats)
        t_n = best_of(lambda: call(_kernels_np), args.repeats)
        print(f"{name:<14} {t_c * 1e3:>10.2f}ms {t_n * 1e3:>10.2f}ms {t_n / t_c:>8.2f}x")

    tile = RgbTile(pixels)
    src = builtin_profile("her2-brand-a")
    dst = builtin_profile("her2-brand-b")
    t_full = best_of(lambda: linear_transfer(tile, src, dst), args.repeats)
    print(f"\nfull linear_transfer ({backend.BACKEND_NAME} backend): {t_full * 1e3:.2f}ms")


if __name__ == "__main__":
    main()
