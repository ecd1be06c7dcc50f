"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The env switch ISOSTENCIL_DISABLE_JIT only changes which build the public
dispatchers pick; here both builds are called directly so one run compares them.
"""

import argparse
import time

import numpy as np

from isostencil import kernels
from isostencil._accel import HAVE_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases():
    freqs = np.arange(0, 257)
    centres = np.linspace(0.05, np.pi - 0.05, 64)
    yield (
        "filon moments 257x64, k<=6",
        lambda: kernels.filon_moments_loop(freqs, centres, 0.05, 6),
        lambda: kernels.filon_moments_numpy(freqs, centres, 0.05, 6),
        lambda a, b: np.max(np.abs(a - b)),
    )
    z = np.linspace(0.0, 0.995, 4000) ** 2
    top, bottom = [-3.3, 0.5, 1.2], [1.0, 2.5]
    yield (
        "3F2 series, 4000 points",
        lambda: kernels.hypergeometric_series_loop(top, bottom, z),
        lambda: kernels.hypergeometric_series_numpy(top, bottom, z),
        lambda a, b: np.max(np.abs(a[0] - b[0])),
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'kernel':32s} {'jit [ms]':>10s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, jit_fn, np_fn, diff in cases():
        jit_fn()  # compile outside the timing
        t_jit, a = best_of(jit_fn, args.repeat)
        t_np, b = best_of(np_fn, args.repeat)
        print(f"{name:32s} {1e3 * t_jit:10.2f} {1e3 * t_np:11.2f} {t_np / t_jit:8.1f} {diff(a, b):10.1e}")


if __name__ == "__main__":
    main()
