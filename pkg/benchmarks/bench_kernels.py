"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Also times a full threshold bracket in a subprocess with JMQKD_DISABLE_NUMBA=1
so the end-to-end cost of the fallback is visible.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from jmqkd import _kernels
from jmqkd.jm_solver import JmProblem

SOLVER_SNIPPET = """
import time, numpy as np
from jmqkd.jm_solver import JmProblem, jm_threshold_bracket
p = JmProblem(np.eye(3), 0.9)
jm_threshold_bracket(p)  # warm-up / jit
t = time.perf_counter(); jm_threshold_bracket(p); print(time.perf_counter() - t)
"""


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def solver_time(disable):
    env = dict(os.environ)
    if disable:
        env["JMQKD_DISABLE_NUMBA"] = "1"
    else:
        env.pop("JMQKD_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", SOLVER_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-solver", action="store_true")
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba unavailable or disabled; nothing to compare")
        return

    rng = np.random.default_rng(0)
    p = JmProblem(np.eye(3), 0.9)
    T = p.targets(0.45)
    x0 = rng.normal(size=(27, 4))
    q0 = np.zeros_like(x0)
    ms = rng.normal(size=(16, 3))
    pts = rng.normal(size=(4, 3))
    start = pts.mean(axis=0)

    cases = [
        ("dykstra 500 sweeps N=3",
         lambda: _kernels.dykstra_sweeps_np(x0.copy(), q0.copy(), p.digits, T, 500),
         lambda: _kernels.dykstra_sweeps(x0, q0, p.digits, T, 500)),
        ("signed norms N=16",
         lambda: _kernels.signed_norms_np(ms),
         lambda: _kernels.signed_norms(ms)),
        ("weiszfeld 4 points",
         lambda: _kernels.weiszfeld_np(pts, start, 1e-12, 100000, 1e-12),
         lambda: _kernels.weiszfeld_loop(pts, start, 1e-12, 100000, 1e-12)),
    ]
    print(f"{'kernel':28s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for name, f_np, f_nb in cases:
        a = best_of(f_np, args.repeat)
        b = best_of(f_nb, args.repeat)
        print(f"{name:28s} {1e3 * a:12.3f} {1e3 * b:12.3f} {a / b:8.1f}")

    if not args.skip_solver:
        a, b = solver_time(True), solver_time(False)
        print(f"{'threshold bracket N=3':28s} {1e3 * a:12.1f} {1e3 * b:12.1f} {a / b:8.1f}")


if __name__ == "__main__":
    main()
