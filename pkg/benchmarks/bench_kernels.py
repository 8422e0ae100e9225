"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [n]``. Both backends are
imported directly, so the result does not depend on ``HETNET_KERNELS``.
"""

from __future__ import annotations

import sys
import timeit

import numpy as np

from hetnet import _kernels_py

try:
    from hetnet import _ckernels
except ImportError:
    _ckernels = None


def workload(n: int):
    rng = np.random.default_rng(1)
    coefs = np.array([5.2e-8, 1.4e-7])
    exps = np.array([2 / 3.6378, 2 / 3.18])
    total = float((coefs * 4.9e14**exps).sum())
    targets = rng.random(n) * total
    u1, u2 = rng.random(n), rng.random(n)
    return coefs, exps, targets, u1, u2


def bench(mod, n: int, repeat: int = 5) -> dict[str, float]:
    coefs, exps, targets, u1, u2 = workload(n)
    sorted_u = np.sort(u1)
    cases = {
        "invert_power_sum": lambda: mod.invert_power_sum(coefs, exps, targets),
        "eval_power_sum": lambda: mod.eval_power_sum(coefs, exps, targets),
        "box_muller": lambda: mod.box_muller(u1, u2),
        "ks_uniform_stat": lambda: mod.ks_uniform_stat(sorted_u),
    }
    return {k: min(timeit.repeat(f, number=1, repeat=repeat)) for k, f in cases.items()}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    n = int(argv[0]) if argv else 100_000
    py = bench(_kernels_py, n)
    cy = bench(_ckernels, n) if _ckernels is not None else None
    print(f"n = {n}")
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>9}")
    for k, t in py.items():
        if cy is None:
            print(f"{k:<18}{t:>12.4f}{'n/a':>12}{'':>9}")
        else:
            print(f"{k:<18}{t:>12.4f}{cy[k]:>12.4f}{t / cy[k]:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
