"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--cutoff 12]
"""
import argparse
import math
import time

import numpy as np

from sqvdp import SystemParams, _backend, assemble, solve
from sqvdp.classical import PhasePoint, fixed_points, integrate
from sqvdp.dynamics import correlation_bdag_b, default_tau_grid
from sqvdp.observables import wigner_at


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(cutoff):
    params = SystemParams(eta=1.0, delta=0.3)
    L = assemble(params, cutoff)
    rho = solve(L)
    tau = default_tau_grid(tau_max=10.0)
    grid = np.linspace(-3, 3, 81)
    alpha = (grid[None, :] + 1j * grid[:, None]).ravel()
    fig1 = SystemParams(force=1.0, delta=1.0, theta=math.pi / 4, eta=1.5)
    drift = SystemParams(force=0.3, delta=1.0, eta=0.2)
    return {
        f"correlation N={cutoff}, tau<=10":
            lambda k: correlation_bdag_b(rho, L, tau, decay_tol=0.0, kernels=k),
        f"wigner 81x81, N={cutoff}": lambda k: wigner_at(rho, alpha, kernels=k),
        "classical integrate t=200": lambda k: integrate(PhasePoint(0.5, 0.0), drift, 200.0, kernels=k),
        "fixed points 24x24 starts": lambda k: fixed_points(fig1, kernels=k),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--cutoff", type=int, default=12)
    args = ap.parse_args()
    if _backend.cython is None:
        raise SystemExit("compiled extension not available; build with pip install -e .")
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, fn in cases(args.cutoff).items():
        py = best_of(lambda: fn(_backend.python), args.repeat)
        cy = best_of(lambda: fn(_backend.cython), args.repeat)
        print(f"{name:34s} {py:11.4f} {cy:11.4f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
