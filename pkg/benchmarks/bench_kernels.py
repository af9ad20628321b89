"""Time the hot kernels on the numba and numpy backends.

Usage::

    python3 benchmarks/bench_kernels.py [--size 96] [--replicates 200] [--repeat 3]
"""
import argparse
import time

import numpy as np

from sar2d import _kernels


def _best(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--size", type=int, default=96, help="lattice side n = m")
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--rho-k", type=int, default=1000, help="rows for the rho kernel")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    n, R = args.size, args.replicates
    eps = np.random.default_rng(0).standard_normal((R, n, n))
    X = _kernels.numpy_impl.simulate_batch(0.3, 0.5, 0.2, eps)
    cases = {
        f"simulate {R}x{n}x{n}": lambda kb: kb.simulate_batch(0.3, 0.5, 0.2, eps),
        f"accumulate {R}x{n}x{n}": lambda kb: kb.accumulate_batch(X, n, n, eps),
        "g_table 2000x2000": lambda kb: kb.g_table(0.3, 0.5, 0.2, 2000, 2000),
        f"rho_rows K={args.rho_k}": lambda kb: kb.rho_rows(0.5, 0.3, args.rho_k,
                                                           int(0.8 * args.rho_k) + 200),
    }
    backends = [_kernels.numpy_impl]
    if _kernels.numba_impl is not None:
        backends.append(_kernels.numba_impl)

    print(f"{'kernel':<28}" + "".join(f"{kb.name:>12}" for kb in backends) + f"{'speedup':>10}")
    for label, fn in cases.items():
        t = [_best(lambda: fn(kb), args.repeat) for kb in backends]
        speed = f"{t[0] / t[-1]:9.1f}x" if len(t) > 1 else ""
        print(f"{label:<28}" + "".join(f"{v * 1e3:10.1f}ms" for v in t) + f"{speed:>10}")


if __name__ == "__main__":
    main()
