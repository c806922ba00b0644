"""Time the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json]

The first numba call includes compilation and is excluded (one warm-up call
per kernel). The numpy path is what ``EXPMONTEL_NO_NUMBA=1`` selects.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from expmontel import FiniteGroupSpec, _kernels


def _cases(rng):
    grid = rng.normal(size=(160, 160)) + 1j * rng.normal(size=(160, 160))
    sections = rng.normal(size=(64, 200)) + 1j * rng.normal(size=(64, 200))
    G = FiniteGroupSpec((8, 8))
    add = G.addition_table()
    tuples = np.array(np.meshgrid(*[np.arange(G.order)] * 3, indexing="ij")).reshape(3, -1).T
    const = np.ones((G.order, 1))
    return {
        "shift_combine 160x160": ("shift_combine", (grid, (3, -2), 0.7 - 0.2j)),
        "hankel_rows 64x200 r=8": ("hankel_rows", (sections, 8, np.abs(sections))),
        "difference_scan |G|=64 n=2": ("difference_scan", (add, tuples, const, 1e-9, 0)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print one JSON document instead of a table")
    args = ap.parse_args(argv)

    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    for label, (name, call_args) in _cases(np.random.default_rng(0)).items():
        fast = getattr(_kernels.numba_impl, name)
        slow = getattr(_kernels.numpy_impl, name)
        fast(*call_args)
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        rows.append({"case": label, "numba_s": t_fast, "numpy_s": t_slow, "speedup": t_slow / t_fast})

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'case':<30} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}")
    for r in rows:
        print(f"{r['case']:<30} {1e3 * r['numba_s']:>11.3f} {1e3 * r['numpy_s']:>11.3f} {r['speedup']:>7.1f}x")


if __name__ == "__main__":
    main()
