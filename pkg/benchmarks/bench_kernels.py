"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one row per kernel with the best wall time of each backend and the
speedup. Also times a full order-5 Kronecker moment (p=3) through the
operator engine with each backend.
"""
import argparse
import time

import numpy as np

from ellwishart import _backend, _kernels_py
from ellwishart.kronecker import clear_operator_cache, wishart_kron_moment

try:
    from ellwishart import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    d = 3 ** 4
    perms = np.stack([rng.permutation(d) for _ in range(6)]).astype(np.int64)
    w = rng.standard_normal(6)
    x = rng.standard_normal((3 ** 4, d, 9))
    xs = np.sort(rng.standard_normal(100_000))
    ys = np.sort(rng.standard_normal(100_000))
    s = np.ascontiguousarray(rng.standard_normal((20_000, 3, 3)))
    k = 3
    idx = np.indices((3,) * (2 * k)).reshape(2 * k, -1)
    rows, cols = idx[:k].astype(np.int64), idx[k:].astype(np.int64)
    return {
        "perm_sum_apply": lambda m: m.perm_sum_apply(perms, w, x),
        "ks_sup_distance": lambda m: m.ks_sup_distance(xs, ys),
        "kron_power_sums": lambda m: m.kron_power_sums(s, rows, cols, 4096),
    }


def engine(module, repeat):
    names = ("perm_sum_apply", "ks_sup_distance", "kron_power_sums")
    saved = {n: getattr(_backend, n) for n in names}
    for n in names:
        setattr(_backend, n, getattr(module, n))
    try:
        sig = np.diag([1.0, 2.0, 3.0])

        def run():
            clear_operator_cache()
            wishart_kron_moment(10, sig, 5)
        return best_of(run, repeat)
    finally:
        for n, f in saved.items():
            setattr(_backend, n, f)
        clear_operator_cache()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _kernels is None:
        print("compiled extension not built; only the numpy fallback is timed")
    print(f"{'kernel':<22}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    rows = [(name, lambda m, f=f: best_of(lambda: f(m), args.repeat))
            for name, f in kernel_cases(rng).items()]
    rows.append(("kron moment p=3 k=5", lambda m: engine(m, max(1, args.repeat // 2))))
    for name, timer in rows:
        t_py = timer(_kernels_py)
        if _kernels is None:
            print(f"{name:<22}{t_py:>12.4f}{'-':>12}{'-':>10}")
            continue
        t_cy = timer(_kernels)
        print(f"{name:<22}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
