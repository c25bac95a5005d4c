"""Time the numba kernels against their numpy fallbacks.

Both variants are imported side by side, so one process covers both paths;
the ``ROLLAGE_DISABLE_NUMBA`` flag only changes which one the library uses.

    python benchmarks/bench_kernels.py --n 200000 --pbar 100 --repeats 5
"""
import argparse
import json
import statistics
import sys
import time

import numpy as np

from rollage import _kernels as k


def best_of(fn, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def cases(n, pbar, seed):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(n)
    phi = np.array([0.5, -0.2, 0.1])
    theta = np.array([0.4, 0.3])
    y = k.arma_filter_np(phi, theta, w)
    gamma = k.autocovariance_np(y, pbar)
    coeffs = rng.uniform(-0.05, 0.05, pbar)
    return {
        "autocovariance": ((y, pbar),),
        "levinson": ((gamma, pbar),),
        "arma_filter": ((phi, theta, w),),
        "ar_residuals": ((y, coeffs),),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--pbar", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)
    if not k.NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1

    results = []
    for name, (call_args,) in cases(args.n, args.pbar, args.seed).items():
        nb = getattr(k, f"{name}_nb")
        npf = getattr(k, f"{name}_np")
        nb(*call_args)  # compile outside the timed region
        a = nb(*call_args)
        b = npf(*call_args)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(z)))) for x, z in
                   zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
        t_nb, _ = best_of(nb, call_args, args.repeats)
        t_np, _ = best_of(npf, call_args, args.repeats)
        results.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np,
                        "speedup": t_np / t_nb if t_nb else float("inf"), "max_abs_diff": diff})

    if args.json:
        print(json.dumps({"n": args.n, "pbar": args.pbar, "results": results}, indent=2))
    else:
        print(f"n={args.n} pbar={args.pbar} best of {args.repeats}")
        print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
        for r in results:
            print(f"{r['kernel']:<16}{r['numba_s']:>12.5f}{r['numpy_s']:>12.5f}"
                  f"{r['speedup']:>10.2f}{r['max_abs_diff']:>12.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
