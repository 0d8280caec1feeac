#!/usr/bin/env python3
"""Benchmark the compiled pair kernels against the numpy fallback.

Times the acceleration kernel (the integrator hot loop) and the certificate
sum for a burst lattice cloud at several N, and reports the speedup plus the
worst relative disagreement between the two backends.

Usage: python benchmarks/bench_backends.py [N ...]
"""

import sys
import time

import numpy as np

from hydrolim import gen_lattice_cloud
from hydrolim._backend import available_backends, get_backend, num_threads


def _time(fn, *args, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv):
    sizes = [int(a) for a in argv] or [256, 1024, 4096]
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend unavailable; benchmarking the fallback alone")
    threads = num_threads()
    print(f"threads={threads}  backends={backends}")
    print(f"{'N':>6} {'kernel':>12} {'compiled[s]':>12} {'fallback[s]':>12} {'speedup':>8} {'max rel diff':>13}")
    for n in sizes:
        pos = gen_lattice_cloud(n, 0.5, 0.0, seed=7)
        sigma, p = 1e-6, 2.0
        rows = []
        fb = get_backend("fallback")
        t_fb_acc, (acc_fb, _) = _time(fb.accel_power_law, pos, sigma, p, threads)
        t_fb_sum, sums_fb = _time(fb.force_sums_power_law, pos, sigma, p, threads)
        if "compiled" in backends:
            co = get_backend("compiled")
            t_co_acc, (acc_co, _) = _time(co.accel_power_law, pos, sigma, p, threads)
            t_co_sum, sums_co = _time(co.force_sums_power_law, pos, sigma, p, threads)
            scale = np.abs(acc_fb).max()
            rows.append(("accelerations", t_co_acc, t_fb_acc,
                         np.abs(acc_co - acc_fb).max() / scale))
            rows.append(("force sums", t_co_sum, t_fb_sum,
                         np.abs(sums_co - sums_fb).max() / np.abs(sums_fb).max()))
        else:
            rows.append(("accelerations", np.nan, t_fb_acc, 0.0))
            rows.append(("force sums", np.nan, t_fb_sum, 0.0))
        for name, t_co, t_fb, diff in rows:
            speed = t_fb / t_co if np.isfinite(t_co) else np.nan
            print(f"{n:>6} {name:>12} {t_co:>12.5f} {t_fb:>12.5f} {speed:>8.2f} {diff:>13.3e}")


if __name__ == "__main__":
    main(sys.argv[1:])
