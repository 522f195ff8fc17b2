"""Compare the numba and pure-numpy kernel backends on every execution path.

Usage: python benchmarks/bench_backends.py [--n 256] [--i 1024] [--r 256] [--b 4] [--repeats 5]
"""
import argparse
import statistics
import time

import numpy as np

from blrkernels import use_backend
from blrkernels.executors import OutputMode
from blrkernels.formats import WorkloadSpec, random_factors
from blrkernels.paths import PATHS
from blrkernels.tensorbase import TileConfig
from blrkernels.verify import rel_error


def time_path(path, X, weights, tile, repeats):
    path(X, weights, tile)  # warm: compiles on first numba use
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = path(X, weights, tile)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), res.Y


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--i", type=int, default=1024)
    ap.add_argument("--r", type=int, default=256)
    ap.add_argument("--b", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=5)
    a = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.standard_normal((a.n, a.i)).astype(np.float32)
    print(f"n={a.n} i=o={a.i} r={a.r} b={a.b}, median of {a.repeats}")
    print(f"{'path':<16}{'numba_s':>12}{'numpy_s':>12}{'ratio':>9}{'max_diff':>12}")
    for name, path in PATHS.items():
        spec = WorkloadSpec(path.method, a.n, a.i, a.i, a.r, a.b)
        weights = path.prepare(random_factors(spec, rng))
        tile = TileConfig(16, 16, 16, 16) if name == "lowrank_fused" else \
            TileConfig(32, 32, 64, 64) if name == "blast_partial" else TileConfig()
        try:
            with use_backend("numba"):
                t_nb, y_nb = time_path(path, X, weights, tile, a.repeats)
            with use_backend("numpy"):
                t_np, y_np = time_path(path, X, weights, tile, a.repeats)
        except Exception as exc:
            print(f"{name:<16}  skipped: {exc}")
            continue
        print(f"{name:<16}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>9.2f}{rel_error(y_nb, y_np):>12.2e}")


if __name__ == "__main__":
    main()
