"""Compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat R]``. Each row times
one kernel on the same inputs under both backends and checks that the two
agree to the last few ulps.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from tdmfair import kernels


def _cases(n):
    d = np.arange(1, n + 1, dtype=float)
    g = d ** 2
    equal = np.ones(n)
    pa = g * (n / g.sum())
    areas = np.full(n, 1.0)
    return {
        "ta_equalize": lambda k: k.ta_equalize(1.0 / g, 1e-10, 200)[0],
        "tapa_equalize": lambda k: k.tapa_equalize(g, float(n), 200)[0],
        "np_equalize": lambda k: k.np_equalize(equal, 2.0, float(n), 200)[0],
        "np_equalize_pa": lambda k: k.np_equalize(pa, 2.0, float(n), 200)[0],
        "powers_for_areas": lambda k: k.powers_for_areas(g, areas, float(n), 200)[0],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000])
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is available")
    names = sorted(backends)
    print(f"{'kernel':<18}{'n':>6}" + "".join(f"{b + ' [ms]':>16}" for b in names)
          + f"{'speedup':>10}{'rel diff':>12}")
    for n in args.sizes:
        for name, fn in _cases(n).items():
            times, values = {}, {}
            for b in names:
                k = kernels.get(b)
                values[b] = fn(k)
                number = 3 if b == "python" else 30
                best = min(timeit.repeat(lambda: fn(k), number=number, repeat=args.repeat))
                times[b] = 1e3 * best / number
            speed = times.get("python", np.nan) / times.get("cython", np.nan)
            diff = (abs(values["cython"] - values["python"]) / abs(values["python"])
                    if len(values) == 2 else np.nan)
            print(f"{name:<18}{n:>6}" + "".join(f"{times[b]:>16.3f}" for b in names)
                  + f"{speed:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
