#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the two hot paths (coincidence-bracket evaluation over angle arrays and
the oracle's mode x time coherence average) under both backends and prints a
speedup table. Run after `pip install -e .`:

    python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from twinellip._kernels import KERNEL_BACKEND, _pure

try:
    from twinellip._kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, *args, repeats=5, inner=20):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / inner)
    return best


def bench_bracket(backend):
    rng = np.random.default_rng(0)
    theta1 = rng.uniform(0, np.pi, 20000)
    theta2 = rng.uniform(0, np.pi, 20000)
    return timeit(backend.bracket_values, 0.7, 0.3, 0.9, -1.0, theta1, theta2)


def bench_time_average(backend):
    rng = np.random.default_rng(1)
    n_modes, n_time = 128, 512
    a = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    b = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    q = np.linspace(-1.0, 1.0, n_modes)
    d = np.linspace(0.0, 200.0, n_time)
    return timeit(backend.time_average_intensity, a, b, q, d)


def main():
    print(f"active backend: {KERNEL_BACKEND}")
    rows = []
    for name, fn in (("bracket_values[20k]", bench_bracket),
                     ("time_average[128x512]", bench_time_average)):
        t_pure = fn(_pure)
        if _fast is not None:
            t_fast = fn(_fast)
            rows.append((name, t_pure, t_fast, t_pure / t_fast))
        else:
            rows.append((name, t_pure, float("nan"), float("nan")))

    header = f"{'kernel':<24}{'python [ms]':>14}{'compiled [ms]':>16}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, t_pure, t_fast, speedup in rows:
        print(f"{name:<24}{t_pure * 1e3:>14.3f}{t_fast * 1e3:>16.3f}{speedup:>10.2f}")
    if _fast is None:
        print("(compiled extension not built; only the fallback was timed)")

    # agreement spot check
    rng = np.random.default_rng(2)
    t1, t2 = rng.uniform(0, np.pi, 100), rng.uniform(0, np.pi, 100)
    ref = _pure.bracket_values(0.5, -0.2, 0.8, 1.0, t1, t2)
    if _fast is not None:
        got = _fast.bracket_values(0.5, -0.2, 0.8, 1.0, t1, t2)
        print(f"backend agreement (bracket): {np.max(np.abs(ref - got)):.3e}")


if __name__ == "__main__":
    main()
