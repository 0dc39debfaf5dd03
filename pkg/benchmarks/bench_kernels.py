"""Times the hot kernels on both backends and prints the speedups.

Run: python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from synergy_lab._kernels import _numpy

try:
    from synergy_lab._kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def bench_cd(backend):
    rng = np.random.default_rng(0)
    nv, nh, B, steps = 4, 6, 100, 1
    a = rng.normal(0, 0.1, nv)
    b = rng.normal(0, 0.1, nh)
    w = rng.normal(0, 0.5, (nv, nh))
    batch = np.where(rng.random((B, nv)) < 0.5, 1.0, -1.0)
    u_h = rng.random((steps, B, nh))
    u_v = rng.random((steps, B, nv))
    return timeit(lambda: backend.cd_stats(a, b, w, batch, batch, steps, True,
                                           u_h, u_v, None), 200)


def bench_gibbs(backend):
    rng = np.random.default_rng(1)
    nv, nh = 4, 6
    a = rng.normal(0, 0.1, nv)
    b = rng.normal(0, 0.1, nh)
    w = rng.normal(0, 1.0, (nv, nh))
    v0 = np.where(rng.random(nv) < 0.5, 1.0, -1.0)
    n_keep, burn, thin = 500, 100, 10  # 5100 sweeps
    u_h = rng.random((burn + n_keep * thin, nh))
    u_v = rng.random((burn + n_keep * thin, nv))
    return timeit(lambda: backend.gibbs_chain(a, b, w, True, v0, n_keep,
                                              burn, thin, u_h, u_v), 10)


def bench_wht(backend):
    rng = np.random.default_rng(2)
    values = rng.normal(0, 1, 1 << 18)
    def run():
        work = values.copy()
        backend.wht_inplace(work)
    return timeit(run, 5)


def bench_moebius(backend):
    rng = np.random.default_rng(3)
    values = rng.normal(0, 1, 1 << 18)
    def run():
        work = values.copy()
        backend.moebius_inplace(work)
    return timeit(run, 5)


BENCHES = [
    ("cd_stats (B=100, 4x6, CD-1)", bench_cd),
    ("gibbs_chain (5100 sweeps, 4x6)", bench_gibbs),
    ("wht_inplace (2^18 values)", bench_wht),
    ("moebius_inplace (2^18 values)", bench_moebius),
]


def main():
    print(f"{'kernel':<34} {'numpy':>12} {'native':>12} {'speedup':>9}")
    for name, bench in BENCHES:
        ref = bench(_numpy)
        if _native is None:
            print(f"{name:<34} {ref * 1e6:>10.1f}us {'n/a':>12} {'':>9}")
            continue
        fast = bench(_native)
        print(f"{name:<34} {ref * 1e6:>10.1f}us {fast * 1e6:>10.1f}us "
              f"{ref / fast:>8.1f}x")
    if _native is None:
        print("\ncompiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
