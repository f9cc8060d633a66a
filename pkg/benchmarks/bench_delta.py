#!/usr/bin/env python3
"""Benchmark the delta match-scan kernels: compiled extension vs pure Python.

Builds synthetic old/new buffer pairs at several sizes and change profiles,
times scan_matches through each kernel, and checks they return identical
matches. Run directly:

    python benchmarks/bench_delta.py [--sizes 1,4,20] [--repeats 3]
"""

import argparse
import random
import time

from appgrease.delta import _scan_py

try:
    from appgrease.delta import _scan as _compiled
except ImportError:
    _compiled = None

BLOCK_SIZE = 4096


def build_case(size_mb: int, profile: str, rng: random.Random) -> tuple[bytes, bytes]:
    old = rng.randbytes(size_mb * 1024 * 1024)
    if profile == "identical":
        return old, old
    if profile == "localized":
        at = len(old) // 3
        return old, old[:at] + rng.randbytes(50 * 1024) + old[at + 50 * 1024 :]
    if profile == "unrelated":
        return old, rng.randbytes(len(old))
    raise ValueError(profile)


def time_kernel(kernel, old: bytes, new: bytes, repeats: int) -> tuple[float, list]:
    best = float("inf")
    matches = None
    for _ in range(repeats):
        started = time.perf_counter()
        matches = kernel.scan_matches(old, new, min(BLOCK_SIZE, len(old)))
        best = min(best, time.perf_counter() - started)
    return best, matches


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1,4,20",
                        help="comma-separated buffer sizes in MiB")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _compiled is None:
        print("compiled kernel not built (pip install -e . rebuilds it); "
              "timing the pure kernel only\n")

    header = f"{'case':>22}  {'python':>10}"
    if _compiled is not None:
        header += f"  {'compiled':>10}  {'speedup':>8}"
    print(header)

    rng = random.Random(1234)
    for size_mb in sizes:
        for profile in ("identical", "localized", "unrelated"):
            old, new = build_case(size_mb, profile, rng)
            py_time, py_matches = time_kernel(_scan_py, old, new, args.repeats)
            line = f"{size_mb:>3} MiB {profile:>14}  {py_time * 1000:>8.1f}ms"
            if _compiled is not None:
                c_time, c_matches = time_kernel(_compiled, old, new, args.repeats)
                assert c_matches == py_matches, "kernels disagree"
                line += f"  {c_time * 1000:>8.1f}ms  {py_time / c_time:>7.1f}x"
            print(line)


if __name__ == "__main__":
    main()
