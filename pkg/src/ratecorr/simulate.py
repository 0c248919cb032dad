"""Seeded Monte Carlo of the exact and perturbative network equations.

Reproducibility contract: each trial owns an RNG stream seeded by
(master seed, trial index), and the per-trial draw order is fixed:
initial conditions first, then the static weight perturbation W, then the
whole Brownian path.  A trial's trajectory therefore depends only on the
seed pair, never on scheduling, and exact/order1/order2 runs with the same
seed consume identical underlying draws (common random numbers).

Statistics are accumulated in one pass from power sums taken around the
stationary state, which keeps the memory footprint at O(grid) while still
providing standard errors for variance and covariance estimates.  Samples
are buffered only for the node tuples requested for higher-order
correlation estimates.

Trials run serially in index order; the accumulation is a sum of per-trial
contributions, so a parallel merge in fixed trial order would reproduce the
same statistics bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import BACKEND, kernels
from .analytic import NoiseSpec
from .errors import (
    ConfigError,
    DegenerateMoment,
    NotPSD,
    NumericalBlowup,
)
from .neuron import NetworkParams, sigmoid, sigmoid_d1, sigmoid_d2, stationary_state
from .topology import WeightedAdjacency, realize

__all__ = [
    "SimConfig",
    "EnsembleStats",
    "sample_brownian_increments",
    "sample_initial_conditions",
    "sample_weight_perturbation",
    "run",
    "run_exact",
    "run_order1",
    "run_order2",
    "estimate_higher_order",
    "trial_rng",
    "BACKEND",
]

BLOWUP_LIMIT = 1e6
PAIR_INDEX = kernels.PAIR_INDEX if hasattr(kernels, "PAIR_INDEX") else \
    tuple((m, n) for m in range(1, 6) for n in range(m, 6))


# --- correlated samplers -----------------------------------------------------

def _uniform_corr_factor(n: int, c: float) -> np.ndarray:
    """Triangular-equivalent factor L of (1-c) Id + c 11^T for c < 0.

    The smallest eigenvalue 1 + c(n-1) decides admissibility; values within
    -1e-10 of zero are clamped to the PSD boundary.
    """
    low = 1.0 + c * (n - 1)
    if low < -1e-10:
        raise NotPSD(f"correlation {c} makes the {n}-variate matrix indefinite "
                     f"(min eigenvalue {low:.3e})")
    sigma = np.full((n, n), c) + (1.0 - c) * np.eye(n)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        evals, vecs = np.linalg.eigh(sigma)
        return vecs * np.sqrt(np.clip(evals, 0.0, None))


def _correlated_std(rng, steps: int, n: int, c: float,
                    factor: np.ndarray | None = None) -> np.ndarray:
    """(steps, n) standard normals with pairwise correlation c.

    For c >= 0 a shared common factor is mixed in: sqrt(1-c) xi + sqrt(c) eta.
    For c < 0 the draws are pushed through a triangular factor of the
    correlation matrix (computed once by the caller when possible).
    """
    if c == 0.0:
        return rng.standard_normal((steps, n))
    if c > 0.0:
        if c > 1.0 + 1e-12:
            raise NotPSD(f"correlation {c} > 1")
        xi = rng.standard_normal((steps, n))
        eta = rng.standard_normal((steps, 1))
        return np.sqrt(1.0 - min(c, 1.0)) * xi + np.sqrt(min(c, 1.0)) * eta
    if factor is None:
        factor = _uniform_corr_factor(n, c)
    xi = rng.standard_normal((steps, n))
    return xi @ factor.T


def sample_brownian_increments(n: int, c1: float, dt: float, rng,
                               steps: int | None = None) -> np.ndarray:
    """Brownian increments with Cov = [(1-c1) Id + c1 11^T] dt.

    Returns (n,) for a single step or (steps, n) for a whole path.
    """
    m = 1 if steps is None else steps
    out = np.sqrt(dt) * _correlated_std(rng, m, n, c1)
    return out[0] if steps is None else out


def sample_initial_conditions(n: int, mu: float, s2: float, c2: float, rng) -> np.ndarray:
    """V(0) ~ N(mu 1, s2^2 [(1-c2) Id + c2 11^T])."""
    return mu + s2 * _correlated_std(rng, 1, n, c2)[0]


def sample_weight_perturbation(adj: WeightedAdjacency, c3: float, rng,
                               factor: np.ndarray | None = None) -> np.ndarray:
    """Unit-variance perturbation on the support of the adjacency.

    Nonzero slots have pairwise correlation c3; the admissible range of c3
    depends on the topology through the total number of connections.
    The returned matrix is unnormalized: callers divide by M alongside the
    mean connectivity.
    """
    mask = adj.mask
    slots = int(mask.sum())
    if slots == 0:
        return np.zeros_like(adj.matrix)
    vals = _correlated_std(rng, 1, slots, c3, factor=factor)[0]
    w = np.zeros(adj.matrix.size)
    w[np.flatnonzero(mask.ravel())] = vals
    return w.reshape(adj.matrix.shape)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-style per-trial stream: one generator per (seed, trial)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(trial))))


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    topology: object
    params: NetworkParams
    noise: NoiseSpec
    t_max: float
    dt: float = 0.1
    n_trials: int = 10_000
    seed: int = 0
    order: str = "exact"
    z_kind: str = "zero"            # weight modulation: zero | exp_decay_J
    h_kind: str = "zero"            # input modulation:  zero | sine_uniform
    mu_branch: int | None = None
    pairs: tuple = ((0, 1),)
    tuples: tuple = ()
    allow_irregular: bool = False
    record_first_trajectory: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.t_max < self.dt:
            raise ConfigError("need dt > 0 and t_max >= dt")
        if self.n_trials < 1:
            raise ConfigError("need at least one trial")
        if self.order not in ("exact", "order1", "order2"):
            raise ConfigError(f"unknown order {self.order!r}")
        if self.z_kind not in ("zero", "exp_decay_J"):
            raise ConfigError(f"unknown z_kind {self.z_kind!r}")
        if self.h_kind not in ("zero", "sine_uniform"):
            raise ConfigError(f"unknown h_kind {self.h_kind!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


def resolve_mu(config: SimConfig) -> float:
    """Stationary branch for the run; refuses to guess among multiple roots."""
    roots = stationary_state(config.params)
    if len(roots) == 1:
        return roots[0]
    if config.mu_branch is None:
        raise ConfigError(
            f"{len(roots)} stationary states {tuple(round(r, 6) for r in roots)}; "
            "select one with mu_branch / --branch"
        )
    if not 0 <= config.mu_branch < len(roots):
        raise ConfigError(f"branch {config.mu_branch} out of range 0..{len(roots) - 1}")
    return roots[config.mu_branch]


# --- one-pass statistics -----------------------------------------------------

class _Accumulator:
    """Power sums around a fixed shift; exact merge order = trial order."""

    def __init__(self, n_times, n_nodes, pairs, shift, tuple_nodes, n_trials):
        self.count = 0
        self.shift = shift
        self.pairs = pairs
        shape = (n_times, n_nodes)
        self.s1 = np.zeros(shape)
        self.s2 = np.zeros(shape)
        self.s3 = np.zeros(shape)
        self.s4 = np.zeros(shape)
        p = len(pairs)
        self.sxy = np.zeros((n_times, p))
        self.sxxy = np.zeros((n_times, p))
        self.sxyy = np.zeros((n_times, p))
        self.sxxyy = np.zeros((n_times, p))
        self.tuple_nodes = tuple(tuple_nodes)
        self.buffers = {node: np.empty((n_trials, n_times)) for node in self.tuple_nodes}
        self.first = None

    def add(self, traj):
        u = traj - self.shift
        self.s1 += u
        u2 = u * u
        self.s2 += u2
        self.s3 += u2 * u
        self.s4 += u2 * u2
        for k, (i, j) in enumerate(self.pairs):
            ui, uj = u[:, i], u[:, j]
            self.sxy[:, k] += ui * uj
            self.sxxy[:, k] += ui * ui * uj
            self.sxyy[:, k] += ui * uj * uj
            self.sxxyy[:, k] += ui * ui * uj * uj
        for node in self.tuple_nodes:
            self.buffers[node][self.count] = traj[:, node]
        if self.first is None:
            self.first = traj.copy()
        self.count += 1


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time-step ensemble statistics with standard errors."""

    times: np.ndarray
    n_trials: int
    mean: np.ndarray            # (T, N)
    var: np.ndarray             # (T, N), unbiased
    sem_mean: np.ndarray
    sem_var: np.ndarray
    pairs: tuple                # ((i, j), ...)
    cov: np.ndarray             # (T, P), unbiased
    corr: np.ndarray
    sem_cov: np.ndarray
    sem_corr: np.ndarray
    backend: str
    tuple_samples: dict = field(default_factory=dict, repr=False)
    first_trajectory: np.ndarray | None = field(default=None, repr=False)

    def pair_index(self, i: int, j: int) -> int:
        return self.pairs.index((i, j))

    def tuple_samples_at(self, nodes, t_index: int) -> np.ndarray:
        """(n_trials, len(nodes)) sample matrix at one time step."""
        return np.stack([self.tuple_samples[n][:, t_index] for n in nodes], axis=1)


def _finalize(acc: _Accumulator, times, backend, keep_first) -> EnsembleStats:
    k = acc.count
    mean_u = acc.s1 / k
    e2 = acc.s2 / k
    e3 = acc.s3 / k
    e4 = acc.s4 / k
    m2 = e2 - mean_u ** 2
    m3 = e3 - 3 * mean_u * e2 + 2 * mean_u ** 3
    m4 = e4 - 4 * mean_u * e3 + 6 * mean_u ** 2 * e2 - 3 * mean_u ** 4
    var = m2 * k / (k - 1) if k > 1 else np.zeros_like(m2)
    sem_mean = np.sqrt(np.maximum(var, 0.0) / k)
    var_of_var = np.maximum(m4 - m2 ** 2 * (k - 3) / (k - 1), 0.0) / k if k > 3 else \
        np.full_like(m2, np.nan)
    sem_var = np.sqrt(var_of_var)

    p = len(acc.pairs)
    cov = np.zeros((len(times), p))
    sem_cov = np.zeros_like(cov)
    corr = np.zeros_like(cov)
    sem_corr = np.zeros_like(cov)
    for idx, (i, j) in enumerate(acc.pairs):
        ui, uj = mean_u[:, i], mean_u[:, j]
        exy = acc.sxy[:, idx] / k
        exxy = acc.sxxy[:, idx] / k
        exyy = acc.sxyy[:, idx] / k
        exxyy = acc.sxxyy[:, idx] / k
        c = exy - ui * uj
        cov[:, idx] = c * k / (k - 1) if k > 1 else 0.0
        # Var((x - xbar)(y - ybar)) from joint central moments
        m22 = exxyy - 2 * uj * exxy - 2 * ui * exyy + (uj ** 2) * e2[:, i] \
            + (ui ** 2) * e2[:, j] + 4 * ui * uj * exy - 3 * ui ** 2 * uj ** 2
        sem_cov[:, idx] = np.sqrt(np.maximum(m22 - c ** 2, 0.0) / k)
        denom = np.sqrt(np.maximum(var[:, i] * var[:, j], 0.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(denom > 0, cov[:, idx] / np.where(denom > 0, denom, 1.0), np.nan)
        corr[:, idx] = r
        sem_corr[:, idx] = (1.0 - np.minimum(r ** 2, 1.0)) / np.sqrt(max(k - 3, 1))

    return EnsembleStats(
        times=times,
        n_trials=k,
        mean=mean_u + acc.shift,
        var=var,
        sem_mean=sem_mean,
        sem_var=sem_var,
        pairs=tuple(acc.pairs),
        cov=cov,
        corr=corr,
        sem_cov=sem_cov,
        sem_corr=sem_corr,
        backend=backend,
        tuple_samples=acc.buffers,
        first_trajectory=acc.first if keep_first else None,
    )


# --- run orchestration -------------------------------------------------------

def _prepare(config: SimConfig):
    adj = realize(config.topology, config.params.lam,
                  allow_irregular=config.allow_irregular)
    config.noise.validate(adj.n, int(adj.mask.sum()) if adj.mask.sum() else None)
    mu = resolve_mu(config)
    m_eff = adj.m if adj.m is not None else 0
    w_factor = None
    if config.noise.c3 < 0.0 and adj.mask.sum() > 0:
        w_factor = _uniform_corr_factor(int(adj.mask.sum()), config.noise.c3)
    b_factor = None
    if config.noise.c1 < 0.0:
        b_factor = _uniform_corr_factor(adj.n, config.noise.c1)
    ic_factor = None
    if config.noise.c2 < 0.0:
        ic_factor = _uniform_corr_factor(adj.n, config.noise.c2)
    return adj, mu, m_eff, w_factor, b_factor, ic_factor


def _draw_trial(config: SimConfig, adj, rng, factors):
    """Fixed draw order: initial conditions, then W, then the Brownian path."""
    w_factor, b_factor, ic_factor = factors
    n = adj.n
    y20 = _correlated_std(rng, 1, n, config.noise.c2, factor=ic_factor)[0]
    if adj.mask.any():
        w_raw = sample_weight_perturbation(adj, config.noise.c3, rng, factor=w_factor)
    else:
        w_raw = np.zeros_like(adj.matrix)
    db_unit = np.sqrt(config.dt) * _correlated_std(
        rng, config.n_steps, n, config.noise.c1, factor=b_factor)
    return y20, w_raw, db_unit


def _per_row_indegree(adj):
    # column vector so that W / degree divides each row by its own in-degree
    deg = adj.mask.sum(axis=1).astype(float)
    return np.where(deg > 0, deg, 1.0)[:, None]


def run(config: SimConfig) -> EnsembleStats:
    """Dispatch on config.order; see run_exact / run_order1 / run_order2."""
    adj, mu, m_eff, w_factor, b_factor, ic_factor = _prepare(config)
    factors = (w_factor, b_factor, ic_factor)
    tracked = {n for pair in config.pairs for n in pair} \
        | {n for tup in config.tuples for n in tup}
    if tracked and (min(tracked) < 0 or max(tracked) >= adj.n):
        raise ConfigError(f"tracked node indices {sorted(tracked)} outside 0..{adj.n - 1}")
    times = np.arange(config.n_steps + 1) * config.dt
    noise = config.noise
    params = config.params
    sp = params.sigmoid
    acc = _Accumulator(len(times), adj.n, list(config.pairs), mu,
                       sorted({n for tup in config.tuples for n in tup}),
                       config.n_trials)

    # W and Z are masked to the support of the mean connectivity and carry
    # the same 1/M normalization (per-row for irregular research runs).
    degree = _per_row_indegree(adj) if adj.m is None else float(max(m_eff, 1))
    jz = (noise.s4 * adj.matrix) if config.z_kind == "exp_decay_J" else \
        np.zeros_like(adj.matrix)
    use_z = config.z_kind == "exp_decay_J" and noise.s4 > 0.0
    use_h = config.h_kind == "sine_uniform" and noise.s5 > 0.0
    sprime = float(sigmoid_d1(mu, sp))
    s2nd = float(sigmoid_d2(mu, sp))
    smu = float(sigmoid(mu, sp))
    jeff = sprime * adj.matrix
    j2 = s2nd * adj.matrix
    h_src = np.sin(2.0 * np.pi * times[:-1]) if config.h_kind == "sine_uniform" \
        else np.zeros(config.n_steps)
    if config.z_kind == "exp_decay_J":
        zpair = np.exp(-times[:-1])
        z_src = smu * params.lam * zpair if adj.m != 0 else np.zeros(config.n_steps)
    else:
        zpair = np.zeros(config.n_steps)
        z_src = np.zeros(config.n_steps)

    for trial in range(config.n_trials):
        rng = trial_rng(config.seed, trial)
        y20, w_raw, db_unit = _draw_trial(config, adj, rng, factors)
        if config.order == "exact":
            v0 = mu + noise.s2 * y20
            jm = adj.matrix + noise.s3 * (w_raw / degree)
            traj, blow = kernels.exact_path(
                v0, jm, jz, use_z, params.i_base, noise.s5, use_h,
                params.tau, sp.t_max, sp.slope, sp.v_t,
                config.dt, noise.s1 * db_unit, BLOWUP_LIMIT)
            vtraj = traj
        else:
            w_norm = w_raw / degree
            w_src = smu * w_norm.sum(axis=1)
            if config.order == "order1":
                traj, blow = kernels.order1_path(
                    y20, jeff, w_src, z_src, h_src,
                    params.tau, config.dt, db_unit, BLOWUP_LIMIT)
                sigmas = np.array([noise.s1, noise.s2, noise.s3, noise.s4, noise.s5])
                vtraj = mu + np.einsum("m,tmn->tn", sigmas, traj)
            else:
                w_eff = sprime * w_norm
                traj, blow = kernels.order2_path(
                    y20, jeff, j2, w_eff, w_src, z_src, zpair, h_src,
                    params.tau, config.dt, db_unit, BLOWUP_LIMIT)
                sigmas = np.array([noise.s1, noise.s2, noise.s3, noise.s4, noise.s5])
                pair_sigmas = np.array([sigmas[m - 1] * sigmas[n - 1]
                                        for (m, n) in PAIR_INDEX])
                coeffs = np.concatenate([sigmas, pair_sigmas])
                vtraj = mu + np.einsum("m,tmn->tn", coeffs, traj)
        if blow:
            raise NumericalBlowup(
                f"trial {trial} exceeded |V| = {BLOWUP_LIMIT:g} at step {blow}",
                trial=trial, step=blow)
        acc.add(vtraj)

    return _finalize(acc, times, BACKEND, config.record_first_trajectory)


def run_exact(config: SimConfig) -> EnsembleStats:
    return run(replace(config, order="exact"))


def run_order1(config: SimConfig) -> EnsembleStats:
    return run(replace(config, order="order1"))


def run_order2(config: SimConfig) -> EnsembleStats:
    return run(replace(config, order="order2"))


# --- higher-order sample correlations ----------------------------------------

def estimate_higher_order(samples: np.ndarray) -> tuple:
    """Normalized joint cumulant of an n-tuple from per-trial samples.

    samples: (n_trials, n) matrix of the tuple's values at one time point.
    Returns (estimate, stderr); the estimate is
    E[prod (x_j - mean_j)] / (prod E|x_j - mean_j|^n)^(1/n), which reduces to
    the sample Pearson coefficient for n = 2.  The stderr propagates the
    numerator's sampling noise through the (slowly varying) denominator.
    """
    samples = np.asarray(samples, dtype=float)
    k, n = samples.shape
    if k < 2:
        raise ConfigError("need at least two trials")
    d = samples - samples.mean(axis=0)
    prods = d.prod(axis=1)
    denom_parts = [np.mean(np.abs(d[:, j]) ** n) for j in range(n)]
    denom = float(np.prod(denom_parts)) ** (1.0 / n)
    if denom < 1e-300:
        raise DegenerateMoment("an absolute central moment in the denominator vanished")
    est = float(prods.mean() / denom)
    se = float(prods.std(ddof=1) / np.sqrt(k) / denom)
    return est, se
