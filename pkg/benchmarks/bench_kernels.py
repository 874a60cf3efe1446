"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py --n 5000 --d 50 --k 20

Each path is run once untimed (to trigger compilation and warm caches),
then ``--repeat`` times; the best wall time is reported. Outputs are also
checked for bit-identity between the two paths.
"""
import argparse
import time

import numpy as np

from repgeom import _kernels
from repgeom._accel import NUMBA_AVAILABLE


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--pairs-n", type=int, default=3000, help="points for the pair-count kernel")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(a.seed)
    Z = rng.standard_normal((a.n, a.d))
    anchors = np.arange(a.n)
    rows = []

    for backend in ("numba", "numpy", "kdtree"):
        t, out = best_of(lambda: _kernels.knn_sq(Z, anchors, a.k, backend), a.repeat)
        rows.append((f"knn {a.n}x{a.d} K={a.k}", backend, t, out))

    P = Z[: a.pairs_n, :3]
    eps = np.geomspace(0.05, 2.0, 12)
    for backend in ("numba", "numpy"):
        t, out = best_of(lambda: _kernels.pairs_within(P, eps, backend), a.repeat)
        rows.append((f"pair counts {a.pairs_n}x3", backend, t, out))

    print(f"{'kernel':<26}{'backend':<9}{'seconds':>9}{'x numba':>9}  identical")
    ref = {}
    for name, backend, t, out in rows:
        t0, out0 = ref.setdefault(name, (t, out))
        print(f"{name:<26}{backend:<9}{t:>9.3f}{t / t0:>9.2f}  {_same(out, out0)}")

if __name__ == "__main__":
    main()
