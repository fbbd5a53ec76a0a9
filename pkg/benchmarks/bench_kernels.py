"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the environment switch is not needed.
Outputs are checked for equality before timing.
"""

import argparse
import time

import numpy as np

from poisson_lab import _purepy

try:
    from poisson_lab import _core
except ImportError:
    _core = None


def _cases():
    n = 2000
    rates = np.full(n, 2.0 / n)
    logq = np.zeros(n)
    geo_rates = np.full(n, 1.0 / n)
    geo_logq = np.log(geo_rates)
    p = np.random.default_rng(0).uniform(0.0, 0.01, 5000)
    row = np.random.default_rng(1).integers(0, 3, 100_000).astype(np.int64)
    cuts = np.array([0, n // 2, n], dtype=np.int64)
    return {
        "uniforms 4096x2000": lambda b: b.uniforms(7, 0, 4096, n, 0),
        "sample_rows bernoulli 4096x2000": lambda b: b.sample_rows(rates, logq, 0, 7, 0, 4096, 0),
        "sample_rows geometric 4096x2000": lambda b: b.sample_rows(geo_rates, geo_logq, 1, 7, 0,
                                                                   4096, 0),
        "segment_sums 4096x2000": lambda b: b.segment_sums(rates, logq, 0, 7, 0, 4096, cuts, 0),
        "window_max_rows m=101": lambda b: b.window_max_rows(rates, logq, 0, 7, 0, 4096, 101, 0),
        "window_max 1e5": lambda b: b.window_max(row, 500),
        "poisson_binomial 5000": lambda b: b.poisson_binomial(p),
        "geometric_convolve 5000": lambda b: b.geometric_convolve(p + 1e-6, 60),
    }


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'kernel':36s} {'cython s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, case in _cases().items():
        py_out = case(_purepy)
        t_py = _best(lambda: case(_purepy), args.repeat)
        if _core is None:
            print(f"{name:36s} {'-':>10s} {t_py:10.4f} {'-':>8s}")
            continue
        c_out = case(_core)
        same = np.array_equal(np.asarray(c_out), np.asarray(py_out)) or np.allclose(
            np.asarray(c_out), np.asarray(py_out), rtol=1e-12, atol=1e-15)
        t_c = _best(lambda: case(_core), args.repeat)
        flag = "" if same else "  MISMATCH"
        print(f"{name:36s} {t_c:10.4f} {t_py:10.4f} {t_py / t_c:8.1f}{flag}")


if __name__ == "__main__":
    main()
