"""Time the numba kernels against the numpy fallback.

Usage::

    python benchmarks/bench_backends.py [--R 1000] [--N 100] [--repeat 3]

Each kernel is run once per backend to warm up (numba compiles on first call
and caches to disk), then timed ``--repeat`` times; the best time is reported
together with the largest difference between the two backends' outputs.
"""
import argparse
import time

import numpy as np

from ouensemble.engine import EnsembleParams, kernels, simulate_Z, simulate_Zstar, taueff_mesh
from ouensemble.populations import Exponential, GeneralizedGamma, derive_particle_params
from ouensemble.rng import Stream, child_key, derive_key


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _diff(a, b):
    a = a[0] if isinstance(a, tuple) else a
    b = b[0] if isinstance(b, tuple) else b
    return float(np.nanmax(np.abs(a - b)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--R", type=int, default=1000)
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    R, N = args.R, args.N

    keys = child_key(derive_key(1, "bench"), np.arange(R, dtype=np.uint64))
    tau = Exponential(rate=1.0).sample(Stream(child_key(keys, 1)), N)
    sigma = GeneralizedGamma(nu=0.5, eta=1.3).sample(Stream(child_key(keys, 2)), N)
    pp = derive_particle_params(tau, sigma, 1.0 / N)
    pkeys = child_key(keys[:, None], np.arange(N, dtype=np.uint64)[None, :])
    grid = np.r_[0.0, np.logspace(-2, 2, 25)]
    nsub = np.ones(grid.size - 1, dtype=np.int64)
    mesh = taueff_mesh(grid)
    tab = kernels.taueff_table(tau, mesh, kernels.RULE_RMS, "numba")
    amp = np.sqrt(2.0) / pp.M
    dt_max = np.maximum(1e-2 * tau.min(axis=1), 1e-2)

    cases = {
        "ou_sum": lambda be: kernels.ou_sum(tau, sigma, pp.m / pp.M[:, None], pkeys, grid, nsub, be),
        "taueff_table": lambda be: kernels.taueff_table(tau, mesh, kernels.RULE_RMS, be),
        "zstar": lambda be: kernels.zstar(tab, np.log(mesh), amp, keys, grid, dt_max, 0.02,
                                          kernels.SCHEME_EULER, 10**7, be),
    }
    params = EnsembleParams(N=N, R=R, q_spec=Exponential(rate=1.0), g_spec=GeneralizedGamma(nu=0.5, eta=1.3))
    cases["simulate_Z"] = lambda be: simulate_Z(params, be).values
    cases["simulate_Zstar"] = lambda be: simulate_Zstar(params, be).values

    print(f"R={R} N={N} repeat={args.repeat}")
    print(f"{'kernel':16s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases.items():
        t_nb, out_nb = best_of(lambda: fn("numba"), args.repeat)
        t_np, out_np = best_of(lambda: fn("numpy"), args.repeat)
        print(f"{name:16s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {_diff(out_nb, out_np):11.3g}")


if __name__ == "__main__":
    main()
