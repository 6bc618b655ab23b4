"""Throughput comparison of the compiled and pure-Python signature kernels.

The Chen-extension step (append one linear segment to a batch of truncated
signatures) dominates signature-basis pricing, so it is the part backed by a
compiled extension. This script times both backends on the same workload and
checks that they agree bitwise.

Run:  python3 benchmarks/bench_signature.py [--paths 20000] [--steps 100] [--order 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from amcpricer.basis_signature import backend_name, get_kernel
from amcpricer import _sigpure


def _run(kernel, increments: np.ndarray, order: int) -> np.ndarray:
    n_paths, n_steps, dim = increments.shape
    state = _sigpure.identity_state(n_paths, dim, order)
    for j in range(n_steps):
        kernel.chen_extend(state, np.ascontiguousarray(increments[:, j]), dim, order)
    return state


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=20_000)
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--order", type=int, default=5)
    parser.add_argument("--dim", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(7)))
    increments = rng.standard_normal((args.paths, args.steps, args.dim)) * 0.05

    kernels = {"pure": get_kernel("pure")}
    try:
        kernels["compiled"] = get_kernel("compiled")
    except RuntimeError:
        print("compiled backend unavailable; timing the pure kernel only")

    print(f"default backend: {backend_name()}")
    print(
        f"workload: {args.paths} paths x {args.steps} segments, "
        f"dim {args.dim}, order {args.order}"
    )
    results = {}
    for name, kernel in kernels.items():
        t0 = time.perf_counter()
        state = _run(kernel, increments, args.order)
        elapsed = time.perf_counter() - t0
        rate = args.paths * args.steps / elapsed
        results[name] = (state, elapsed)
        print(f"{name:>9}: {elapsed:8.3f} s   {rate:12.0f} segment-updates/s")

    if len(results) == 2:
        a, b = results["pure"][0], results["compiled"][0]
        identical = np.array_equal(a, b)
        print(f"bitwise identical results: {identical}")
        speedup = results["pure"][1] / results["compiled"][1]
        print(f"speedup (pure / compiled): {speedup:.1f}x")
        if not identical:
            raise SystemExit("backend mismatch")


if __name__ == "__main__":
    main()
