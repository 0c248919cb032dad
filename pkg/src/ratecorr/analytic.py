"""First-order analytic covariance, correlation, and the closed special cases.

The equal-time covariance of the membrane potentials truncated at first
perturbative order splits into three contributions, one per randomness
source:

    Cov(V_i, V_j)(t) = s1^2 T_noise + s2^2 T_initial + s3^2 T_weights

    T_noise   = int_0^t [Phi Phi^T]_ij du
                + C1 { int_0^t (sum_k Phi_ik)(sum_l Phi_jl) du - int [Phi Phi^T]_ij }
    T_initial = [Phi Phi^T]_ij(t)
                + C2 { (sum_k Phi_ik)(sum_l Phi_jl)(t) - [Phi Phi^T]_ij(t) }
    T_weights = S^2(mu) { (1/M) (P P^T)_ij
                + C3 [ (sum_k P_ik)(sum_l P_jl) - (1/M) (P P^T)_ij ] }

with P = int_0^t Phi.  The k != l double sums have been rewritten as full
double sums minus the diagonal, and for uniform in-degree the full double
sums factor exactly through row sums of Phi (see propagator module), so every
term is a closed-form mode sum: no quadrature anywhere on this path.

Third-order contributions (the ones linear in s4, s5) are out of analytic
scope; the second-order Monte Carlo simulator covers them empirically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateVariance,
    NotFullyConnected,
    ZeroInDegree,
)
from .propagator import (
    PropagatorHandle,
    expm1_over,
    integral_pair_sum,
    phi_phiT_entry,
    phi_phiT_time_integral,
    row_sum,
    row_sum_integral,
    row_sum_pair_integral,
)

__all__ = [
    "NoiseSpec",
    "CovarianceReport",
    "cov_term_noise",
    "cov_term_initial",
    "cov_term_weights",
    "covariance",
    "variance",
    "correlation",
    "covariance_report",
    "circulant_chaos_covariance",
    "higher_order_correlation_fc",
]

VARIANCE_FLOOR = 1e-300


@dataclass(frozen=True)
class NoiseSpec:
    """Intensities of the five randomness sources and their correlations.

    s1: Brownian background noise        (correlation c1 across neurons)
    s2: initial conditions               (correlation c2)
    s3: static synaptic-weight scatter   (correlation c3 across connections)
    s4: deterministic weight modulation Z(t)
    s5: deterministic input modulation H(t)
    """

    s1: float = 0.0
    s2: float = 0.0
    s3: float = 0.0
    s4: float = 0.0
    s5: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    def __post_init__(self):
        for name in ("s1", "s2", "s3", "s4", "s5"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    def validate(self, n: int, n_connections: int | None = None) -> None:
        """PSD ranges: 1/(1-N) <= c1, c2 <= 1; c3 range depends on the topology
        through the number of connections N*M."""
        lo = 1.0 / (1.0 - n)
        for name, c in (("c1", self.c1), ("c2", self.c2)):
            if not lo - 1e-12 <= c <= 1.0 + 1e-12:
                raise ConfigError(f"{name}={c} outside PSD range [{lo}, 1] for n={n}")
        if n_connections is not None and n_connections > 1:
            lo3 = 1.0 / (1.0 - n_connections)
            if not lo3 - 1e-12 <= self.c3 <= 1.0 + 1e-12:
                raise ConfigError(
                    f"c3={self.c3} outside PSD range [{lo3}, 1] for {n_connections} connections"
                )


def cov_term_noise(h: PropagatorHandle, i: int, j: int, t, c1: float):
    """Brownian contribution per unit s1^2 (diagonal sum plus C1 off-diagonal)."""
    diag = phi_phiT_time_integral(h, i, j, t)
    if c1 == 0.0:
        return diag
    return diag + c1 * (row_sum_pair_integral(h, t) - diag)


def cov_term_initial(h: PropagatorHandle, i: int, j: int, t, c2: float):
    """Initial-condition contribution per unit s2^2."""
    diag = phi_phiT_entry(h, i, j, t)
    if c2 == 0.0:
        return diag
    rs = row_sum(h, t)
    return diag + c2 * (rs * rs - diag)


def cov_term_weights(h: PropagatorHandle, i: int, j: int, t, c3: float):
    """Weight-scatter contribution per unit s3^2; undefined for M = 0."""
    if h.m == 0:
        raise ZeroInDegree("weight randomness is undefined for a network with M = 0")
    smu2 = h.smu * h.smu
    diag = integral_pair_sum(h, i, j, t)
    out = smu2 / h.m * diag
    if c3 != 0.0:
        prs = row_sum_integral(h, t)
        out = out + c3 * smu2 * (prs * prs - diag / h.m)
    return out


def covariance(h: PropagatorHandle, noise: NoiseSpec, i: int, j: int, t):
    """First-order Cov(V_i(t), V_j(t)); only s1, s2, s3 contribute at this order."""
    out = np.zeros_like(np.asarray(t, dtype=float))
    if noise.s1 > 0.0:
        out = out + noise.s1 ** 2 * cov_term_noise(h, i, j, t, noise.c1)
    if noise.s2 > 0.0:
        out = out + noise.s2 ** 2 * cov_term_initial(h, i, j, t, noise.c2)
    if noise.s3 > 0.0:
        out = out + noise.s3 ** 2 * cov_term_weights(h, i, j, t, noise.c3)
    return float(out) if np.ndim(t) == 0 else out


def variance(h: PropagatorHandle, noise: NoiseSpec, i: int, t):
    return covariance(h, noise, i, i, t)


def correlation(h: PropagatorHandle, noise: NoiseSpec, i: int, j: int, t):
    """Pearson correlation Cov_ij / sqrt(Var_i Var_j)."""
    cov = covariance(h, noise, i, j, t)
    var_i = variance(h, noise, i, t)
    var_j = variance(h, noise, j, t)
    if np.ndim(t) == 0:
        if var_i < VARIANCE_FLOOR and var_j < VARIANCE_FLOOR:
            raise DegenerateVariance(f"both variances vanish at t={t}")
        return cov / np.sqrt(var_i * var_j)
    degenerate = (var_i < VARIANCE_FLOOR) & (var_j < VARIANCE_FLOOR)
    if degenerate.any():
        raise DegenerateVariance(
            f"both variances vanish at t={np.asarray(t)[degenerate][0]}"
        )
    return cov / np.sqrt(var_i * var_j)


@dataclass(frozen=True)
class CovarianceReport:
    """Covariance curves for one pair on a time grid, with the per-source split."""

    times: np.ndarray
    pair: tuple
    cov: np.ndarray
    var_i: np.ndarray
    var_j: np.ndarray
    corr: np.ndarray
    term_noise: np.ndarray = field(repr=False, default=None)
    term_initial: np.ndarray = field(repr=False, default=None)
    term_weights: np.ndarray = field(repr=False, default=None)


def covariance_report(h: PropagatorHandle, noise: NoiseSpec, i: int, j: int,
                      times) -> CovarianceReport:
    times = np.asarray(times, dtype=float)
    t1 = noise.s1 ** 2 * cov_term_noise(h, i, j, times, noise.c1) \
        if noise.s1 > 0 else np.zeros_like(times)
    t2 = noise.s2 ** 2 * cov_term_initial(h, i, j, times, noise.c2) \
        if noise.s2 > 0 else np.zeros_like(times)
    t3 = noise.s3 ** 2 * cov_term_weights(h, i, j, times, noise.c3) \
        if noise.s3 > 0 else np.zeros_like(times)
    cov = t1 + t2 + t3
    var_i = variance(h, noise, i, times)
    var_j = variance(h, noise, j, times)
    denom = np.sqrt(var_i * var_j)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > VARIANCE_FLOOR, cov / np.where(denom > 0, denom, 1.0),
                        np.nan)
    return CovarianceReport(times, (i, j), cov, var_i, var_j, corr, t1, t2, t3)


def circulant_chaos_covariance(i: int, j: int, t, nu: int, n: int,
                               noise: NoiseSpec, h: PropagatorHandle):
    """Fully closed-form covariance for the uncorrelated circulant network.

    Valid for C1 = C2 = C3 = 0 and a circulant band of half-width nu (the
    complete graph at nu = floor(N/2)); the three cosine-mode sums are
    evaluated exactly.  The handle must have been built for that circulant.
    """
    if noise.c1 != 0.0 or noise.c2 != 0.0 or noise.c3 != 0.0:
        raise ConfigError("circulant chaos covariance requires c1 = c2 = c3 = 0")
    if h.n != n:
        raise ConfigError(f"handle is for n={h.n}, asked for n={n}")
    a = h.a
    k = np.arange(n)
    cos = np.cos(2.0 * np.pi * k * (i - j) / n)
    t_arr = np.asarray(t, dtype=float)
    term1 = np.real(expm1_over(2.0 * a.real, t_arr) @ cos) / n
    term2 = (np.exp(2.0 * np.multiply.outer(t_arr, a.real)) @ cos) / n
    g = expm1_over(a, t_arr)
    term3 = ((np.abs(g) ** 2) @ cos) / n
    out = noise.s1 ** 2 * term1 + noise.s2 ** 2 * term2 \
        + noise.s3 ** 2 * h.smu ** 2 / h.m * term3
    return float(out) if np.ndim(t) == 0 else out


def higher_order_correlation_fc(h: PropagatorHandle, noise: NoiseSpec,
                                order: int, t):
    """n-point correlation of a fully connected network at first order.

    Zero-mean jointly normal potentials reduce every moment to pairwise
    covariances, which for the complete graph collapses to 0 for odd order
    and Corr_2^(order/2) for even order.
    """
    if order < 2:
        raise ConfigError(f"order must be >= 2, got {order}")
    if h.m != h.n - 1:
        raise NotFullyConnected(
            f"closed-form higher orders need the complete graph (M = N-1), got M={h.m}"
        )
    if order % 2 == 1:
        return 0.0 if np.ndim(t) == 0 else np.zeros_like(np.asarray(t, dtype=float))
    pair = correlation(h, noise, 0, 1, t)
    return pair ** (order // 2)
