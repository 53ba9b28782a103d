"""Compare the compiled and numpy SU(2) product kernels.

    python3 benchmarks/bench_kernels.py --sizes 1000 100000 --repeat 5
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from dspin import _pykernels as py

try:
    from dspin import _ckernels as ck
except ImportError:  # extension not built
    ck = None


def best_of(fn, arg, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(arg)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000, 1_000_000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print machine-readable rows")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    rows = []
    for n in args.sizes:
        w = np.ascontiguousarray(rng.normal(scale=1e-2, size=(n, 3)))
        for name in ("chain_product", "cumulative_product"):
            t_py = best_of(getattr(py, name), w, args.repeat)
            row = {"kernel": name, "n": n, "python_s": t_py}
            if ck is not None:
                t_c = best_of(getattr(ck, name), w, args.repeat)
                gap = float(np.max(np.abs(getattr(ck, name)(w) - getattr(py, name)(w))))
                row.update(cython_s=t_c, speedup=t_py / t_c, max_abs_diff=gap)
            rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':20s} {'n':>9s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>8s} {'max diff':>9s}")
    for r in rows:
        if "cython_s" in r:
            print(f"{r['kernel']:20s} {r['n']:9d} {r['python_s']:12.4g} {r['cython_s']:12.4g} {r['speedup']:8.1f} {r['max_abs_diff']:9.1e}")
        else:
            print(f"{r['kernel']:20s} {r['n']:9d} {r['python_s']:12.4g} {'n/a':>12s}")


if __name__ == "__main__":
    main()
