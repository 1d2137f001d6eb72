"""Time the ascent kernel on the numba path against the pure-numpy path.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--max-iterations 2000]

Both paths start from the same random isometry and run the same number of
iterations (the gain tolerance is tiny so neither stops early). Roundoff
differences between the two paths can grow on slowly converging cases,
so ``|dI|`` is small but not always at machine precision before the
ascent has settled.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qpyramid import _kernels
from qpyramid.geometry import pyramid_from_nr0, signal_states
from qpyramid.optimizer import _Ensemble

CASES = [(3, 0.05), (4, 0.01), (6, 0.5), (10, 5.0)]


def run(ens, b0, iters, use_numba):
    history = np.zeros(iters + 1)
    t0 = time.perf_counter()
    _, info, n_iter, _ = _kernels.ascend_kernel(
        b0, ens.psi, ens.c, ens.owner, ens.n_states, ens.precond,
        iters, 1e-300, history, use_numba,
    )
    return time.perf_counter() - t0, info, n_iter


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--max-iterations", type=int, default=2000)
    args = ap.parse_args()

    print(f"numba available: {_kernels.numba is not None}")
    if _kernels.numba is None:
        return
    # compile once outside the timings
    ens = _Ensemble(*signal_states(pyramid_from_nr0(3, 0.5)))
    run(ens, _kernels.polar_numpy(np.random.default_rng(0).standard_normal((6, 3))), 2, True)

    print(f"{'N':>3} {'Nr0':>7} {'K':>4} {'iters':>6} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'|dI|':>9}")
    for n, nr0 in CASES:
        ens = _Ensemble(*signal_states(pyramid_from_nr0(n, nr0)))
        k = n * (n + 1) // 2
        b0 = _kernels.polar_numpy(np.random.default_rng(n).standard_normal((k, n)))
        slow = [run(ens, b0, args.max_iterations, False) for _ in range(args.repeat)]
        fast = [run(ens, b0, args.max_iterations, True) for _ in range(args.repeat)]
        t_np = np.median([s[0] for s in slow])
        t_nb = np.median([f[0] for f in fast])
        print(f"{n:>3} {nr0:>7g} {k:>4} {fast[0][2]:>6} {1e3 * t_np:>10.2f} {1e3 * t_nb:>10.2f} "
              f"{t_np / t_nb:>8.1f} {abs(slow[0][1] - fast[0][1]):>9.1e}")


if __name__ == "__main__":
    main()
