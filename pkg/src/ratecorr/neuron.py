"""Sigmoid rate function, stationary states, and the effective connectivity.

The single-neuron nonlinearity is the logistic sigmoid
S(V) = T_MAX / (1 + exp(-slope*(V - V_T))).  The network's stationary state
solves mu = tau*(lam*S(mu) + i_base), which can have up to three roots for
steep sigmoids; all roots in the invariant bracket are reported and callers
select a branch explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NoRoot
from .topology import WeightedAdjacency

__all__ = [
    "SigmoidParams",
    "NetworkParams",
    "sigmoid",
    "sigmoid_d1",
    "sigmoid_d2",
    "stationary_state",
    "effective_matrix",
]


@dataclass(frozen=True)
class SigmoidParams:
    t_max: float = 1.0
    slope: float = 1.0
    v_t: float = 0.0

    def __post_init__(self):
        if self.t_max <= 0 or self.slope <= 0:
            raise ConfigError("sigmoid needs t_max > 0 and slope > 0")


@dataclass(frozen=True)
class NetworkParams:
    tau: float
    lam: float
    i_base: float
    sigmoid: SigmoidParams

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"time constant must be positive, got {self.tau}")


def sigmoid(v, p: SigmoidParams):
    """S(v); evaluated through tanh so large |v| saturates without overflow."""
    return p.t_max * 0.5 * (1.0 + np.tanh(0.5 * p.slope * (v - p.v_t)))


def sigmoid_d1(v, p: SigmoidParams):
    """S'(v) = slope * [S - S^2/T_MAX]."""
    s = sigmoid(v, p)
    return p.slope * (s - s * s / p.t_max)


def sigmoid_d2(v, p: SigmoidParams):
    """S''(v) = slope * S'(v) * (1 - 2 S(v)/T_MAX)."""
    s = sigmoid(v, p)
    return p.slope * sigmoid_d1(v, p) * (1.0 - 2.0 * s / p.t_max)


def stationary_state(params: NetworkParams, subdivisions: int = 1024) -> tuple:
    """All real roots of mu = tau*(lam*S(mu) + i_base), sorted ascending.

    S is bounded in (0, T_MAX), so every fixed point lies in
    [tau*i_base - |tau*lam|*T_MAX, tau*i_base + |tau*lam|*T_MAX].  A sign
    change scan over that bracket feeds Brent's method; a couple of Newton
    steps then polish each root below 1e-12 residual.
    """
    tau, lam, i_base, sp = params.tau, params.lam, params.i_base, params.sigmoid
    if lam == 0.0:
        return (tau * i_base,)

    def g(mu):
        return mu - tau * (lam * sigmoid(mu, sp) + i_base)

    half = abs(tau * lam) * sp.t_max
    lo = tau * i_base - half - 1e-9
    hi = tau * i_base + half + 1e-9
    grid = np.linspace(lo, hi, subdivisions + 1)
    vals = g(grid)
    roots = []
    for k in range(subdivisions):
        a, b = grid[k], grid[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(brentq(g, a, b, xtol=1e-15, rtol=8.9e-16))
    if vals[-1] == 0.0:
        roots.append(grid[-1])

    polished = []
    for mu in roots:
        for _ in range(4):
            slope = 1.0 - tau * lam * sigmoid_d1(mu, sp)
            if slope == 0.0:
                break
            mu -= g(mu) / slope
        if abs(g(mu)) <= 1e-12:
            polished.append(mu)
    # steep sigmoids can put two scan hits on one root
    polished.sort()
    dedup = []
    for mu in polished:
        if not dedup or abs(mu - dedup[-1]) > 1e-9 * max(1.0, abs(mu)):
            dedup.append(mu)
    if not dedup:
        raise NoRoot("no fixed point found in the invariant bracket")
    return tuple(dedup)


def effective_matrix(adj: WeightedAdjacency, mu: float, params: NetworkParams):
    """A = -(1/tau) Id + J S'(mu) and the effective connectivity J S'(mu)."""
    j_eff = adj.matrix * sigmoid_d1(mu, params.sigmoid)
    a = j_eff - np.eye(adj.n) / params.tau
    return a, j_eff
