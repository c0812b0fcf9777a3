"""Benchmark the numba-jitted kernels against their pure-numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--nodes 300] [--repeats 50]

The dispatch inside the package picks one path at import time (see the
CONTEXTSTREAM_NUMBA env flag); here both implementations are called directly
so a single process can compare them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from contextstream import _kernels


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best * 1000.0


def random_dag_adj(rng, n: int, p: float) -> np.ndarray:
    adj = np.triu(rng.random((n, n)) < p, k=1)
    return adj


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=300)
    parser.add_argument("--features", type=int, default=32)
    parser.add_argument("--batch", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n = args.nodes
    adj = random_dag_adj(rng, n, p=3.0 / n)
    reach = _kernels.closure_numpy(adj)
    y = (rng.random(n) < 0.3).astype(np.uint8)
    ys = (rng.random((args.batch, n)) < 0.3).astype(np.uint8)
    W = rng.normal(size=(n, args.features))
    b = rng.normal(size=n)
    x = rng.normal(size=args.features)

    cases = [
        ("closure", (adj,)),
        ("prune_redundant", (adj, reach)),
        ("repair_up", (y, reach)),
        ("repair_down", (y, reach)),
        ("repair_up_batch", (ys, reach)),
        ("repair_down_batch", (ys, reach)),
        ("perceptron_step", (W.copy(), b.copy(), x, y, 1.0)),
    ]

    print(f"nodes={n} features={args.features} batch={args.batch} "
          f"repeats={args.repeats} numba={'yes' if _kernels.USING_NUMBA else 'NO'}")
    header = f"{'kernel':<20} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        np_ms = time_call(getattr(_kernels, f"{name}_numpy"), *call_args, repeats=args.repeats)
        if _kernels.USING_NUMBA:
            jit_fn = getattr(_kernels, f"{name}_jit")
            jit_fn(*call_args)  # compile before timing
            jit_ms = time_call(jit_fn, *call_args, repeats=args.repeats)
            print(f"{name:<20} {np_ms:>10.3f} {jit_ms:>10.3f} {np_ms / jit_ms:>7.1f}x")
        else:
            print(f"{name:<20} {np_ms:>10.3f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
