"""Time the compiled kernels against their pure-numpy fallbacks.

Run with numba available:

    python3 benchmarks/bench_kernels.py

The numpy column is always measured in-process; set AIRPOLICY_NO_NUMBA=1
to confirm the fallback path is what the library would actually pick.
"""

import time

import numpy as np

from airpolicy import kernels
from airpolicy.rng import SplitMix64


def _time(fn, *args, repeat=7, warmup=2):
    for _ in range(warmup):
        fn(*args)
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        samples.append((time.perf_counter() - t0) * 1e3)
    arr = np.array(samples)
    return arr.mean(), arr.std()


def bench_dtw(n=400):
    gen = SplitMix64(1)
    a = np.array(gen.normals(n))
    b = np.array(gen.normals(n))
    cost = np.abs(a[:, None] - b[None, :])
    rows = []
    rows.append(("dtw_accumulate", *_time(kernels.dtw_accumulate_numpy, cost),
                 None))
    if kernels.HAS_NUMBA:
        from airpolicy.kernels import _dtw_accumulate_numba
        assert np.array_equal(kernels.dtw_accumulate_numpy(cost),
                              _dtw_accumulate_numba(cost, -1))
        rows[-1] = ("dtw_accumulate", rows[-1][1], rows[-1][2],
                    _time(_dtw_accumulate_numba, cost, -1))
    return rows


def bench_split(n=4000, d=10):
    gen = SplitMix64(2)
    X = np.array(gen.normals(n * d)).reshape(n, d)
    Y = np.array(gen.normals(n * 2)).reshape(n, 2)
    w = np.ones(n)
    rows = [("best_split", *_time(kernels.best_split_numpy, X, Y, w), None)]
    if kernels.HAS_NUMBA:
        from airpolicy.kernels import _best_split_numba
        f, t, s = _best_split_numba(X, Y, w)
        assert kernels.best_split_numpy(X, Y, w) == (int(f), float(t), float(s))
        rows[-1] = ("best_split", rows[-1][1], rows[-1][2],
                    _time(_best_split_numba, X, Y, w))
    return rows


def bench_lasso(n=2000, d=30):
    gen = SplitMix64(3)
    X = np.array(gen.normals(n * d)).reshape(n, d)
    y = np.array(gen.normals(n))
    args = (X, y, 0.01, 1e-10, 200)
    rows = [("lasso_cd", *_time(kernels.lasso_cd_numpy, *args), None)]
    if kernels.HAS_NUMBA:
        from airpolicy.kernels import _lasso_cd_numba
        w_np, sweeps_np, obj_np = kernels.lasso_cd_numpy(*args)
        w_nb, sweeps_nb, obj_nb = _lasso_cd_numba(*args)
        assert sweeps_np == sweeps_nb
        assert np.array_equal(w_np, w_nb) and np.array_equal(obj_np, obj_nb)
        rows[-1] = ("lasso_cd", rows[-1][1], rows[-1][2],
                    _time(_lasso_cd_numba, *args))
    return rows


def main():
    print(f"numba available: {kernels.HAS_NUMBA} (selected backend: {kernels.BACKEND})")
    print(f"{'kernel':<16}{'numpy ms':>14}{'numba ms':>14}{'speedup':>10}")
    for rows in (bench_dtw(), bench_split(), bench_lasso()):
        for name, np_mean, np_std, numba in rows:
            if numba is None:
                print(f"{name:<16}{np_mean:>9.3f} ±{np_std:<4.2f}{'-':>14}{'-':>10}")
            else:
                nb_mean, nb_std = numba
                print(f"{name:<16}{np_mean:>9.3f} ±{np_std:<4.2f}"
                      f"{nb_mean:>9.3f} ±{nb_std:<4.2f}{np_mean / nb_mean:>9.1f}x")


if __name__ == "__main__":
    main()
