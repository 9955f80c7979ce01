"""Compare the compiled stepping kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--t-end T] [--repeats K]
Runs the same integrations through both backends and reports wall times.
"""

import argparse
import time

import numpy as np

from zerodef._kernels import BACKEND_NAME, backend, purepy
from zerodef.models import McKeithanParams, mckeithan
from zerodef.network import laplacian


def run(mod, net, x0, t_end, method):
    B = np.array(net.B, dtype=float)
    BA = B @ laplacian(net)
    kinds = np.zeros(net.n, dtype=np.intc)
    params = np.zeros(net.n)
    return mod.run_integration(
        B, BA, kinds, params, np.array(x0, dtype=float), t_end,
        method, 1e-3 if method == 0 else 1e-2, 1e-8, 1e-10, t_end / 50.0,
        0, np.zeros_like(B), 0.0, np.zeros(net.n), 0.0,
        np.empty(0, dtype=np.int64), np.empty(0), np.empty(0),
        1e-9, 10, 50_000_000,
    )


def bench(mod, net, x0, t_end, method, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = run(mod, net, x0, t_end, method)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-end", type=float, default=50.0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if BACKEND_NAME == "purepy":
        print("compiled backend not built; benchmarking the fallback only")

    cases = [
        ("pair adaptive", mckeithan(McKeithanParams.unit(0)), 1),
        ("pair rk4", mckeithan(McKeithanParams.unit(0)), 0),
        ("chain N=2 adaptive", mckeithan(McKeithanParams.unit(2)), 1),
        ("chain N=2 rk4", mckeithan(McKeithanParams.unit(2)), 0),
    ]
    rng = np.random.default_rng(0)
    print(f"{'case':24} {'steps':>8} {'compiled':>12} {'numpy':>12} {'speedup':>9}")
    for name, net, method in cases:
        x0 = rng.uniform(0.5, 5.0, net.n)
        t_fast, res_fast = bench(backend, net, x0, args.t_end, method, args.repeats)
        t_slow, res_slow = bench(purepy, net, x0, args.t_end, method, args.repeats)
        # step sequences diverge at ulp level, so final states agree only
        # to the global integration error
        drift = np.abs(res_fast[1][-1] - res_slow[1][-1]).max()
        assert drift < 1e-6, f"backend disagreement {drift}"
        steps = res_fast[3]
        label = f"{t_fast*1e3:9.2f} ms" if backend is not purepy else "     n/a"
        print(
            f"{name:24} {steps:>8} {label:>12} {t_slow*1e3:9.2f} ms "
            f"{(t_slow / t_fast):>8.1f}x"
        )


if __name__ == "__main__":
    main()
