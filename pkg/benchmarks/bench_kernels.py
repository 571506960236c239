"""Time the compiled and pure-numpy aggregation/defuzzification kernels.

    python benchmarks/bench_kernels.py --rows 20000 --rules 6 --grid 1001
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fuzzycausal import _jit, kernels


def problem(rows: int, rules: int, grid: int, labels: int = 3, seed: int = 0):
    rng = np.random.default_rng(seed)
    g = np.linspace(0.0, 25.0, grid)
    peaks = np.linspace(0.0, 25.0, labels)
    cons = np.clip(1 - np.abs(g[None, :] - peaks[:, None]) / (25.0 / (labels - 1)), 0, 1)
    strength = rng.uniform(0, 1, (rows, rules))
    strength[rng.uniform(size=strength.shape) < 0.4] = 0.0
    return strength, rng.integers(0, labels, rules), cons, g


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("--rules", type=int, default=6)
    ap.add_argument("--grid", type=int, default=1001)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    s, idx, cons, g = problem(args.rows, args.rules, args.grid)
    print(f"rows={args.rows} rules={args.rules} grid={args.grid} numba={_jit.HAVE_NUMBA}")
    ref = kernels.aggregate_defuzzify(s, idx, cons, g, use_jit=False)
    t_np = best_of(lambda: kernels.aggregate_defuzzify(s, idx, cons, g, use_jit=False), args.repeat)
    print(f"numpy   {t_np * 1e3:9.2f} ms")
    if not _jit.HAVE_NUMBA:
        return
    kernels.aggregate_defuzzify(s[:2], idx, cons, g, use_jit=True)  # compile outside the timing
    out = kernels.aggregate_defuzzify(s, idx, cons, g, use_jit=True)
    t_jit = best_of(lambda: kernels.aggregate_defuzzify(s, idx, cons, g, use_jit=True), args.repeat)
    diff = float(np.nanmax(np.abs(out - ref)))
    print(f"numba   {t_jit * 1e3:9.2f} ms   speed-up {t_np / t_jit:6.1f}x   max |diff| {diff:.2e}")


if __name__ == "__main__":
    main()
