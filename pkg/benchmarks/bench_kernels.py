"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size HxW] [--repeats N]
"""

import argparse
import time

import numpy as np

from wiltmetrics import _kernels_py

try:
    from wiltmetrics import _kernels_c
except ImportError:
    _kernels_c = None


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", default="1080x1920", help="image size as HxW")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    h, w = (int(v) for v in args.size.lower().split("x"))

    rng = np.random.default_rng(0)
    image = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    mask = (rng.random((h, w)) > 0.5).astype(np.uint8)

    backends = [("python", _kernels_py)]
    if _kernels_c is not None:
        backends.append(("cython", _kernels_c))
    else:
        print("compiled extension not available; benchmarking numpy only")

    cases = [
        ("srgb_to_hsv_planes", lambda b: b.srgb_to_hsv_planes(image)),
        ("srgb_to_lab_planes", lambda b: b.srgb_to_lab_planes(image)),
        ("erode 3x3", lambda b: b.erode(mask, 3)),
        ("dilate 3x3", lambda b: b.dilate(mask, 3)),
    ]

    print(f"image {h}x{w}, best of {args.repeats}")
    header = f"{'kernel':22s}" + "".join(f"{name:>12s}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for case_name, call in cases:
        times = [_time(call, impl, repeats=args.repeats) for _, impl in backends]
        line = f"{case_name:22s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:9.2f}x"
        print(line)

    if _kernels_c is not None:
        a = _kernels_py.srgb_to_lab_planes(image)
        b = _kernels_c.srgb_to_lab_planes(image)
        print(f"\nbackend max |lab difference|: {np.abs(a - b).max():.3g}")
        same = np.array_equal(_kernels_py.erode(mask, 3), _kernels_c.erode(mask, 3))
        print(f"morphology bit-identical: {same}")


if __name__ == "__main__":
    main()
