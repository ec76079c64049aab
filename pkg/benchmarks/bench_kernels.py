"""Benchmark the numba-compiled recursion kernels against the pure-python
fallbacks, plus one end-to-end fit in each mode.

Run:  python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from volspill import kernels

SIZES = (1_000, 4_000, 16_000)
REPEATS = 50


def _time(fn, *args, repeats=REPEATS):
    fn(*args)  # warm-up / compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_filters():
    if not kernels.NUMBA_ENABLED:
        sys.exit("run with numba enabled (unset VOLSPILL_NUMBA) to compare both paths")
    rng = np.random.default_rng(0)
    a = np.array([0.08])
    g = np.array([0.05])
    b = np.array([0.85])
    cases = [
        ("garch", kernels.garch_filter, kernels.garch_filter_py,
         lambda eps: (eps, 1.0, 0.1, a, b)),
        ("tgarch", kernels.tgarch_filter, kernels.tgarch_filter_py,
         lambda eps: (eps, 1.0, 0.1, a, g, b)),
        ("egarch", kernels.egarch_filter, kernels.egarch_filter_py,
         lambda eps: (eps, 0.0, -0.1, a, g, b)),
        ("apgarch", kernels.apgarch_filter, kernels.apgarch_filter_py,
         lambda eps: (eps, 1.0, 0.1, a, g, b, 1.7)),
    ]
    print(f"{'kernel':<10} {'n':>7} {'numba (ms)':>12} {'python (ms)':>12} {'speedup':>9}")
    for name, jit_fn, py_fn, make_args in cases:
        for n in SIZES:
            eps = rng.standard_normal(n)
            args = make_args(eps)
            t_jit = _time(jit_fn, *args)
            t_py = _time(py_fn, *args, repeats=3)
            print(
                f"{name:<10} {n:>7} {1e3 * t_jit:>12.3f} {1e3 * t_py:>12.3f} "
                f"{t_py / t_jit:>8.0f}x"
            )


FIT_SNIPPET = """
import time
import volspill as vs
spec = vs.GarchSpec(vs.Family.GARCH)
params = vs.GarchParams(omega=0.1, alpha=(0.1,), beta=(0.8,))
series = vs.simulate(spec, params, 4000, seed=1)
vs.fit(spec, series)  # warm-up / compile
t0 = time.perf_counter()
fit = vs.fit(spec, series)
print(f"{time.perf_counter() - t0:.3f}")
assert fit.converged
"""


def bench_fit():
    print("\nfull GARCH(1,1) fit, n=4000 (fresh process per mode):")
    for label, flag in (("numba", "1"), ("python fallback", "0")):
        env = dict(os.environ, VOLSPILL_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", FIT_SNIPPET], env=env, capture_output=True, text=True
        )
        if out.returncode != 0:
            print(f"  {label}: FAILED\n{out.stderr}")
            continue
        print(f"  {label:<16} {float(out.stdout.strip()):.3f} s")


if __name__ == "__main__":
    bench_filters()
    bench_fit()
