#!/usr/bin/env python3
"""Benchmark the compiled trial kernels against the pure-NumPy fallback.

Times one Monte Carlo batch per integrator (exact / order1 / order2) on the
circular-ladder network for both backends and prints the speedup.  Run after
`pip install -e . --no-build-isolation`; if the extension is missing only the
fallback column appears.
"""

import time

import numpy as np

import ratecorr as rc
from ratecorr import _kernels_py
from ratecorr import simulate as sim

try:
    from ratecorr import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

N_TRIALS = 2000
N_STEPS = 100
DT = 0.1


def _setup():
    params = rc.NetworkParams(1.0, 1.0, 0.0, rc.SigmoidParams())
    spec = rc.GraphProduct("cartesian", (rc.Cycle(10), rc.Path(2)))
    adj = rc.realize(spec, 1.0)
    mu = rc.stationary_state(params)[0]
    from ratecorr.neuron import sigmoid, sigmoid_d1, sigmoid_d2
    sprime = float(sigmoid_d1(mu, params.sigmoid))
    smu = float(sigmoid(mu, params.sigmoid))
    s2nd = float(sigmoid_d2(mu, params.sigmoid))
    return params, adj, mu, sprime, smu, s2nd


def bench(kernels, which):
    params, adj, mu, sprime, smu, s2nd = _setup()
    n = adj.n
    jeff = sprime * adj.matrix
    j2 = s2nd * adj.matrix
    jz = np.zeros_like(adj.matrix)
    z_src = np.zeros(N_STEPS)
    zpair = np.exp(-np.arange(N_STEPS) * DT)
    h_src = np.sin(2 * np.pi * np.arange(N_STEPS) * DT)
    t0 = time.perf_counter()
    for trial in range(N_TRIALS):
        rng = sim.trial_rng(1234, trial)
        y20 = rng.standard_normal(n)
        w = sim.sample_weight_perturbation(adj, 0.5, rng) / adj.m
        db = np.sqrt(DT) * rng.standard_normal((N_STEPS, n))
        if which == "exact":
            kernels.exact_path(mu + 0.1 * y20, adj.matrix + 0.1 * w, jz, False,
                               0.0, 0.0, False, 1.0, 1.0, 1.0, 0.0, DT,
                               0.1 * db, 1e6)
        elif which == "order1":
            kernels.order1_path(y20, jeff, smu * w.sum(axis=1), z_src, h_src,
                                1.0, DT, db, 1e6)
        else:
            kernels.order2_path(y20, jeff, j2, sprime * w, smu * w.sum(axis=1),
                                z_src, zpair, h_src, 1.0, DT, db, 1e6)
    return time.perf_counter() - t0


def main():
    print(f"CL_10 (N=20), {N_TRIALS} trials x {N_STEPS} steps, dt={DT}")
    print(f"{'kernel':<8} {'numpy [s]':>10} {'compiled [s]':>13} {'speedup':>8}")
    for which in ("exact", "order1", "order2"):
        t_py = bench(_kernels_py, which)
        if _kernels_c is not None:
            t_c = bench(_kernels_c, which)
            print(f"{which:<8} {t_py:>10.2f} {t_c:>13.2f} {t_py / t_c:>7.1f}x")
        else:
            print(f"{which:<8} {t_py:>10.2f} {'-':>13} {'-':>8}")


if __name__ == "__main__":
    main()
