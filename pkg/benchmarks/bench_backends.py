"""Time every dispatched kernel on the numba and pure-numpy backends.

The backend is chosen at import time from SOFTLEV_DISABLE_NUMBA, so the
comparison needs two interpreters: this script re-invokes itself with
``--worker`` once per backend, collects one JSON blob from each, and prints
a table of per-call times with the numpy/numba speedup.

Usage: python benchmarks/bench_backends.py [--n 256] [--d 16] [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
from time import perf_counter


def _inputs(n, d):
    import numpy as np

    from softlev.rng import generator

    g = generator(20260825)
    A = g.standard_normal((n, d))
    B = A + 1e-3 * g.standard_normal((n, d))
    M = g.standard_normal((n, d))
    x = g.standard_normal(d)
    p = g.random(n) + 1e-3
    p /= p.sum()
    q = g.random(n) + 1e-3
    q /= q.sum()
    v = g.standard_normal(n)
    u = 0.5 + 1.5 * g.random(n)
    cdf = np.cumsum(p)
    draws = g.random(n)
    return {
        "softmax_probs": (A @ x,),
        "h2_tv": (p, q),
        "weighted_mean": (p, v),
        "weighted_variance": (p, v),
        "searchsorted_right": (cdf, draws),
        "row_gram_gap": (A, B),
        "softmax_h2_objective": (A, B, x),
        "softmax_var_objective": (A, M, x),
        "leverage_probs": (A,),
        "leverage_w_parts": (A, M),
        "leverage_h2_objective": (A, B, u),
        "leverage_var_objective": (A, M, u),
    }


def _time_call(fn, args, calls, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = perf_counter()
        for _ in range(calls):
            fn(*args)
        best = min(best, (perf_counter() - t0) / calls)
    return best


def run_worker(n, d, calls, repeats):
    from softlev import _kernels

    _kernels.warmup()
    results = {}
    for name, args in _inputs(n, d).items():
        fn = getattr(_kernels, name)
        fn(*args)  # compile/caching pass outside the timer
        results[name] = _time_call(fn, args, calls, repeats)
    print(json.dumps({"backend": _kernels.BACKEND, "results": results}))


def _spawn(disable_numba, argv):
    env = dict(os.environ)
    env.pop("SOFTLEV_DISABLE_NUMBA", None)
    if disable_numba:
        env["SOFTLEV_DISABLE_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker", *argv],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(proc.stdout)


def run_orchestrator(args):
    argv = ["--n", str(args.n), "--d", str(args.d), "--calls", str(args.calls), "--repeats", str(args.repeats)]
    plain = _spawn(True, argv)
    jitted = _spawn(False, argv)
    if jitted["backend"] != "numba":
        print("warning: numba backend unavailable; comparing numpy against itself", file=sys.stderr)
    print(f"shapes: ({args.n}, {args.d}); per-call time, best of {args.repeats} x {args.calls} calls\n")
    width = max(len(k) for k in plain["results"])
    print(f"{'kernel':<{width}}  {'numpy (us)':>10}  {'numba (us)':>10}  {'speedup':>7}")
    for name, np_t in plain["results"].items():
        nb_t = jitted["results"][name]
        print(f"{name:<{width}}  {np_t * 1e6:>10.2f}  {nb_t * 1e6:>10.2f}  {np_t / nb_t:>6.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--worker", action="store_true", help="time the current backend and emit JSON")
    parser.add_argument("--n", type=int, default=256)
    parser.add_argument("--d", type=int, default=16)
    parser.add_argument("--calls", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if args.worker:
        run_worker(args.n, args.d, args.calls, args.repeats)
    else:
        run_orchestrator(args)


if __name__ == "__main__":
    main()
