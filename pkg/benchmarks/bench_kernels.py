"""Compare the compiled and pure-numpy RK4 kernels.

    python3 benchmarks/bench_kernels.py [--sizes 4 8 16] [--steps 2000] [--repeat 5]

Reports the best wall time per backend and the max-abs difference between
their trajectories (they run the same arithmetic, so it should be ~1e-15 or 0).
"""

import argparse
import time

import numpy as np

from phasemap.kernels import backends
from phasemap.rng import SplitMix64


def bench(size, steps, repeat):
    rng = SplitMix64(size)
    p = rng.symmetric((size, size))
    q = rng.symmetric((size, size))
    x0 = np.eye(size)
    w = 1.0 + 0.5 * np.cos(np.linspace(0.0, 1.0, 2 * steps + 1))
    h = 1.0 / steps
    results = {}
    for name, fn in backends().items():
        best = np.inf
        for _ in range(repeat):
            start = time.perf_counter()
            traj, bad = fn(p, q, x0, w, w, h, steps)
            best = min(best, time.perf_counter() - start)
        results[name] = (best, np.asarray(traj), bad)
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12, 24])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'size':>5} {'backend':>9} {'best [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for size in args.sizes:
        res = bench(size, args.steps, args.repeat)
        base = res["python"]
        for name, (t, traj, _) in sorted(res.items()):
            diff = float(np.max(np.abs(traj - base[1])))
            print(f"{size:>5} {name:>9} {1e3 * t:>11.2f} {base[0] / t:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
