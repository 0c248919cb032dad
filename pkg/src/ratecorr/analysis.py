"""Headline experiments: chaos-vs-connections, input damping, synchronization.

* ``chaos_scan`` evaluates the closed-form uncorrelated circulant covariance
  over the band half-width nu, showing that decorrelation needs a diverging
  in-degree, not just a diverging network size.
* ``sync_limit`` classifies the long-time correlation regime of a linearized
  network: a simple dominant eigenvalue with non-negative real part drives
  every pairwise correlation to exactly 1 (stochastic synchronization); if
  every mode decays the correlation settles at the stationary ratio instead.
* ``sync_constraint_solve`` finds parameter tuples that place the dominant
  eigenvalue of the fully connected network exactly at zero.
* ``sync_experiment`` and ``input_scan`` are seeded Monte Carlo protocols on
  top of the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .analytic import NoiseSpec, circulant_chaos_covariance, correlation
from .errors import ConfigError, DegenerateVariance, NoSolution, RealnessViolation
from .neuron import NetworkParams, SigmoidParams, sigmoid, sigmoid_d1
from .propagator import IMAG_TOL, PropagatorHandle, build_propagator
from .simulate import EnsembleStats, SimConfig, run_exact
from .topology import Circulant, complete

__all__ = [
    "ChaosRow",
    "SyncRegime",
    "SyncSolution",
    "chaos_scan",
    "sync_limit",
    "sync_family",
    "sync_constraint_solve",
    "sync_experiment",
    "input_scan",
]

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class ChaosRow:
    nu: int
    m: int
    corr: float


def chaos_scan(n: int, nus, t: float, noise: NoiseSpec, params: NetworkParams,
               mu: float) -> list:
    """corr(0, 1)(t) of the uncorrelated circulant network per band half-width."""
    if noise.c1 != 0.0 or noise.c2 != 0.0 or noise.c3 != 0.0:
        raise ConfigError("chaos scan is defined for c1 = c2 = c3 = 0")
    rows = []
    for nu in nus:
        spec = Circulant(n, frozenset(range(1, int(nu) + 1)))
        h = build_propagator(spec, params, mu)
        cov = circulant_chaos_covariance(0, 1, t, int(nu), n, noise, h)
        var = circulant_chaos_covariance(0, 0, t, int(nu), n, noise, h)
        rows.append(ChaosRow(int(nu), h.m, cov / var))
    return rows


@dataclass(frozen=True)
class SyncRegime:
    """Long-time correlation classification of the linearized network."""

    a_bar: float                 # largest real part among eigenvalues of A
    multiplicity: int
    sync: bool                   # a_bar >= 0: dominant mode does not decay
    limit_matrix: np.ndarray     # E = sum over the dominant cluster of Q_. B_.
    limit_correlation: float     # exactly 1.0 for a simple non-decaying mode
    degenerate_rows: tuple       # rows with vanishing dominant eigenvector entry


def sync_limit(h: PropagatorHandle, pair=(0, 1),
               noise: NoiseSpec | None = None) -> SyncRegime:
    """Classify the t -> +inf correlation regime for the given handle.

    With a dominant cluster of multiplicity one and a_bar >= 0 the limiting
    correlation is exactly 1 independent of eigenvector normalization
    (the Q_ir Q_jr products cancel).  When every mode decays the reported
    value is the stationary correlation ratio, computed by default for
    uncorrelated Brownian input only (noise = s1).
    """
    a = h.a
    dom = int(np.argmax(a.real))
    a_bar = float(a.real[dom])
    cluster = np.flatnonzero(
        np.abs(a - a[dom]) <= DEGENERACY_TOL * max(1.0, abs(a[dom])))
    m = len(cluster)
    basis = h.spectrum.basis
    q = basis.q_matrix()
    b = basis.q_inv()
    e_mat = np.zeros((h.n, h.n), dtype=complex)
    for k in cluster:
        e_mat += np.outer(q[:, k], b[k, :])
    residue = float(np.max(np.abs(e_mat.imag)))
    if residue > IMAG_TOL * max(1.0, float(np.max(np.abs(e_mat)))):
        raise RealnessViolation(
            f"dominant-cluster limit matrix has imaginary residue {residue:.3e}")
    e_mat = e_mat.real

    col = np.abs(q[:, dom])
    degenerate = tuple(np.flatnonzero(col < 1e-12 * col.max()).tolist())

    i, j = pair
    sync = a_bar >= -DEGENERACY_TOL
    if sync and m == 1:
        limit = 1.0
    elif sync:
        num = float(e_mat[i] @ e_mat[j])
        den = math.sqrt(float(e_mat[i] @ e_mat[i]) * float(e_mat[j] @ e_mat[j]))
        limit = num / den
    else:
        limit = float(correlation(h, noise or NoiseSpec(s1=1.0), i, j, np.inf))
    return SyncRegime(a_bar, m, sync, e_mat, limit, degenerate)


@dataclass(frozen=True)
class SyncSolution:
    params: NetworkParams
    mu: float
    branch: int                  # +1 or -1 in the stationary-sigmoid pair
    constraint_residual: float
    a0: float


def sync_family(i_base: float) -> SyncSolution:
    """Closed solution family: slope = t_max = 1, v_t = 0, lam = -2*i_base,
    tau = -2/i_base (any i_base < 0), stationary state mu = 0."""
    if i_base >= 0:
        raise NoSolution("the closed family needs a negative baseline input")
    params = NetworkParams(-2.0 / i_base, -2.0 * i_base, i_base, SigmoidParams(1.0, 1.0, 0.0))
    return _package_solution(params, branch=+1)


def _branch_value(params: NetworkParams, branch: int) -> float:
    sp = params.sigmoid
    disc = 1.0 - 4.0 / (params.tau * params.lam * sp.slope * sp.t_max)
    if disc < -1e-14:
        raise NoSolution(
            f"tau*lam*slope*t_max = {params.tau * params.lam * sp.slope * sp.t_max:.6g} < 4")
    return sp.t_max * (1.0 + branch * math.sqrt(max(disc, 0.0))) / 2.0


def _package_solution(params: NetworkParams, branch: int) -> SyncSolution:
    sp = params.sigmoid
    s_b = _branch_value(params, branch)
    mu = params.tau * (params.lam * s_b + params.i_base)
    residual = abs(float(sigmoid(mu, sp)) - s_b)
    a0 = -1.0 / params.tau + params.lam * float(sigmoid_d1(mu, sp))
    return SyncSolution(params, mu, branch, residual, a0)


def sync_constraint_solve(sigmoid_params: SigmoidParams, free: str,
                          tau: float | None = None, lam: float | None = None,
                          i_base: float | None = None) -> list:
    """Solve the zero-dominant-eigenvalue constraint for one free parameter.

    The other two of (tau, lam, i_base) must be supplied.  Setting the
    dominant eigenvalue of the fully connected network to zero forces
    S(mu) onto one of two branches; consistency with the stationary-state
    equation then pins the free parameter.  All returned tuples satisfy the
    constraint to 1e-10 and have a0 = 0 to the same tolerance.
    """
    if free not in ("tau", "lam", "i_base"):
        raise ConfigError(f"free parameter must be tau, lam or i_base, not {free!r}")
    fixed = {"tau": tau, "lam": lam, "i_base": i_base}
    if fixed[free] is not None:
        raise ConfigError(f"{free} is the free parameter, do not supply it")
    missing = [k for k, v in fixed.items() if v is None and k != free]
    if missing:
        raise ConfigError(f"missing fixed parameters: {missing}")

    sp = sigmoid_params
    solutions = []

    if free == "i_base":
        # closed form: the stationary equation inverts through the logit
        for branch in (+1, -1):
            try:
                s_b = _branch_value(NetworkParams(tau, lam, 0.0, sp), branch)
            except NoSolution:
                continue
            if not 0.0 < s_b < sp.t_max:
                continue
            mu = sp.v_t - math.log(sp.t_max / s_b - 1.0) / sp.slope
            ib = mu / tau - lam * s_b
            solutions.append(_package_solution(NetworkParams(tau, lam, ib, sp), branch))
    else:
        def make(x):
            return NetworkParams(x if free == "tau" else tau,
                                 x if free == "lam" else lam,
                                 i_base, sp)

        for branch in (+1, -1):
            def fun(x, branch=branch):
                p = make(x)
                s_b = _branch_value(p, branch)
                mu = p.tau * (p.lam * s_b + p.i_base)
                return float(sigmoid(mu, sp)) - s_b

            # discriminant boundary: tau*lam >= 4/(slope*t_max)
            known = tau if free == "lam" else lam
            bound = 4.0 / (sp.slope * sp.t_max * known) if known else None
            if bound is None or bound <= 0:
                continue
            # tangency case: the two sigmoid branches coalesce exactly at the
            # boundary, which the sign-change scan cannot bracket
            if abs(fun(bound)) <= 1e-11:
                solutions.append(_package_solution(make(bound), branch))
            grid = bound * np.geomspace(1.0 + 1e-9, 1e4, 2000)
            vals = []
            for x in grid:
                try:
                    vals.append(fun(x))
                except (NoSolution, OverflowError):
                    vals.append(np.nan)
            vals = np.asarray(vals)
            for k in range(len(grid) - 1):
                va, vb = vals[k], vals[k + 1]
                if np.isnan(va) or np.isnan(vb):
                    continue
                if va == 0.0 or va * vb < 0.0:
                    x0 = grid[k] if va == 0.0 else brentq(fun, grid[k], grid[k + 1],
                                                          xtol=1e-14, rtol=8.9e-16)
                    solutions.append(_package_solution(make(x0), branch))

    good = [s for s in solutions if s.constraint_residual <= 1e-10 and abs(s.a0) <= 1e-10]
    deduped = []
    for s in sorted(good, key=lambda s: (s.branch, s.mu)):
        if not any(abs(s.mu - d.mu) < 1e-8
                   and abs(getattr(s.params, free) - getattr(d.params, free)) < 1e-8
                   for d in deduped):
            deduped.append(s)
    if not deduped:
        raise NoSolution("no parameter tuple satisfies the constraint")
    return deduped


def sync_experiment(n_list, params: NetworkParams, noise: NoiseSpec,
                    t_max: float = 15.0, dt: float = 0.1, n_trials: int = 1000,
                    seed: int = 0, threshold: float = 0.9) -> dict:
    """Exact-SDE synchronization curves per network size.

    Returns {n: (EnsembleStats, time_to_threshold)} where the time is the
    first grid point with corr(0,1) >= threshold (inf if never reached).
    The threshold is presentational; the full curve is what matters.
    """
    if noise.s1 == 0.0 and noise.s2 == 0.0 and noise.s3 == 0.0:
        raise DegenerateVariance(
            "all stochastic intensities vanish; correlation is undefined")
    out = {}
    for n in n_list:
        cfg = SimConfig(topology=complete(int(n)), params=params, noise=noise,
                        t_max=t_max, dt=dt, n_trials=n_trials, seed=seed,
                        order="exact", pairs=((0, 1),))
        stats = run_exact(cfg)
        corr = stats.corr[:, 0]
        above = np.flatnonzero(corr >= threshold)
        tta = float(stats.times[above[0]]) if above.size else math.inf
        out[int(n)] = (stats, tta)
    return out


@dataclass(frozen=True)
class InputScanRow:
    i_base: float
    max_abs_corr: float
    sem_at_max: float
    t_at_max: float
    stats: EnsembleStats


def input_scan(i_values, base: SimConfig) -> list:
    """Exact-SDE correlation magnitude per baseline input (damping protocol)."""
    rows = []
    for ib in i_values:
        cfg = replace(base, params=replace(base.params, i_base=float(ib)),
                      order="exact")
        stats = run_exact(cfg)
        corr = np.abs(stats.corr[1:, 0])
        k = int(np.argmax(corr))
        rows.append(InputScanRow(float(ib), float(corr[k]),
                                 float(stats.sem_corr[1 + k, 0]),
                                 float(stats.times[1 + k]), stats))
    return rows
