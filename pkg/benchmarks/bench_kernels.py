#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size WxH] [--repeat N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from semcom.kernels import available_backends


def synthetic_mask(rng, width, height):
    """Blob-shaped foreground, roughly 8% occupancy."""
    mask = np.zeros((height, width), dtype=np.uint8)
    for _ in range(24):
        x = int(rng.integers(0, width - 40))
        y = int(rng.integers(0, height - 40))
        w = int(rng.integers(8, 40))
        h = int(rng.integers(8, 40))
        mask[y : y + h, x : x + w] = 1
    return mask


def bench(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", default="960x540", help="frame size WxH")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    width, height = (int(v) for v in args.size.split("x"))

    rng = np.random.default_rng(0)
    mask = synthetic_mask(rng, width, height)
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)

    backends = available_backends()
    cases = [
        ("label_components", "label_components", (mask,)),
        ("dilate r=2", "dilate", (mask, 2)),
        ("median 3x3", "median_filter", (pixels, 3)),
    ]

    print(f"kernel benchmarks on {width}x{height}, best of {args.repeat}")
    header = f"{'kernel':<18}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label, fn_name, fn_args in cases:
        times = {
            name: bench(getattr(mod, fn_name), fn_args, args.repeat)
            for name, mod in backends.items()
        }
        row = f"{label:<18}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "native" in times and "fallback" in times:
            row += f"{times['fallback'] / times['native']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
