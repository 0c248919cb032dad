"""Spectral evaluation of the fundamental matrix Phi(t) = exp(A t).

Every quantity the covariance formulas need is a mode sum over the
eigenvalues a_k = -1/tau + e_k * S'(mu) of the linearized drift matrix:

    Phi_ij(t)              = sum_k  exp(a_k t)        w_k(i, j)
    [Phi(t) Phi^T(t)]_ij   = sum_k  exp(2 Re(a_k) t)  w_k(i, j)
    int_0^t Phi_ij         = sum_k  g(a_k, t)         w_k(i, j)
    sum_k P_ik P_jk        = sum_k  |g(a_k, t)|^2     w_k(i, j)

with g(a, t) = (exp(a t) - 1)/a (t when a = 0) and P = int_0^t Phi.  The mode
weights w_k depend only on the eigenbasis: (1/N) f_ijk for the Fourier block
basis, Q_ik Q_jk for a real orthogonal basis.  The dense-numeric basis has no
orthogonality to exploit, so the Phi Phi^T quantities become quadratic forms
over the Gram matrix Qinv Qinv^T; that route exists for cross-checking only.

For uniform in-degree the ones vector is an eigenvector, so row sums of Phi
equal exp(a0 t) exactly and the k != l double sums in the covariance formulas
factor through row sums with no quadrature.

Mode sums are mathematically real; an imaginary residue above tolerance
signals a basis bug and raises RealnessViolation instead of being dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonInvariantTopology, RealnessViolation
from .neuron import NetworkParams, sigmoid, sigmoid_d1
from .spectral import (
    DenseNumeric,
    FourierBlock,
    RealOrthogonal,
    Spectrum,
    dense_spectrum,
    indegree_of,
    spectrum_of,
)
from .topology import WeightedAdjacency

__all__ = [
    "PropagatorHandle",
    "build_propagator",
    "phi_entry",
    "phi_phiT_entry",
    "phi_time_integral",
    "phi_phiT_time_integral",
    "integral_pair_sum",
    "row_sum",
    "row_sum_integral",
    "row_sum_pair_integral",
    "phi_matrix",
    "expm1_over",
    "IMAG_TOL",
]

IMAG_TOL = 1e-12
ZERO_MODE_TOL = 1e-12


def expm1_over(a, t):
    """(exp(a t) - 1)/a over outer(t, a); the a = 0 mode integrates to t.

    t may be a scalar or 1-d array; t = inf is allowed when every nonzero
    mode decays (stationary limits).
    """
    a = np.asarray(a, dtype=complex)
    scalar_t = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    null = np.abs(a) < ZERO_MODE_TOL
    safe = np.where(null, 1.0, a)
    out = np.empty((t_arr.size, a.size), dtype=complex)
    finite = np.isfinite(t_arr)
    if finite.any():
        tf = t_arr[finite]
        vals = np.expm1(np.multiply.outer(tf, a)) / safe
        if null.any():
            vals[:, null] = np.multiply.outer(tf, np.ones(int(null.sum())))
        out[finite] = vals
    if (~finite).any():
        if np.any(~null & (a.real >= 0.0)):
            raise ValueError("infinite-horizon integral of a non-decaying mode")
        stationary = np.where(null, np.inf + 0j, -1.0 / safe)
        out[~finite] = stationary
    return out[0] if scalar_t else out


def _as_real(values, what: str):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
        residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
        if residue > IMAG_TOL * scale:
            raise RealnessViolation(
                f"{what}: imaginary residue {residue:.3e} exceeds tolerance"
            )
        values = values.real
    return values


def _scalarize(values, t):
    return float(values) if np.ndim(t) == 0 else values


@dataclass(frozen=True)
class PropagatorHandle:
    """Frozen spectral context: spectrum of the weight matrix plus tau, S'(mu), S(mu), M."""

    spectrum: Spectrum
    tau: float
    sprime: float
    smu: float
    m: int

    @property
    def n(self) -> int:
        return self.spectrum.n

    @cached_property
    def a(self) -> np.ndarray:
        """Eigenvalues of A = -(1/tau) Id + J S'(mu), ordered like the spectrum."""
        return -1.0 / self.tau + self.spectrum.eigenvalues * self.sprime

    @cached_property
    def a0(self) -> complex:
        """Mode of the ones eigenvector: row sums of Phi(t) are exp(a0 t)."""
        if isinstance(self.spectrum.basis, FourierBlock):
            # k = 0 is the constant Fourier column; no need to materialize Q
            return complex(self.a[0])
        q = self.spectrum.basis.q_matrix()
        colsum = np.abs(q.sum(axis=0))
        k = int(np.argmax(colsum))
        # a unit column sums to sqrt(N) in modulus iff it is proportional to ones
        if not np.isclose(colsum[k], np.sqrt(self.n), atol=1e-8):
            raise NonInvariantTopology("ones vector is not an eigenvector of this basis")
        return complex(self.a[k])

    def weights(self, i: int, j: int) -> np.ndarray:
        """Mode weights w_k(i, j); Phi_ij(t) = sum_k exp(a_k t) w_k."""
        basis = self.spectrum.basis
        if isinstance(basis, FourierBlock):
            r, s = basis.r, basis.s
            k = np.arange(self.n)
            phase = (k // s) * ((i // s) - (j // s)) / r + (k % s) * (i - j) / s
            return np.exp(2j * np.pi * phase) / self.n
        if isinstance(basis, RealOrthogonal):
            return basis.q[i] * basis.q[j]
        if isinstance(basis, DenseNumeric):
            return basis.q[i] * basis.qinv[:, j]
        raise TypeError(f"unknown basis {basis!r}")

    @cached_property
    def _gram(self) -> np.ndarray:
        # Qinv Qinv^T, needed only on the dense-numeric route.
        basis = self.spectrum.basis
        return basis.qinv @ basis.qinv.T

    def _pair_quadratic(self, i: int, j: int, coeff) -> np.ndarray:
        # sum_{m,n} Q_im Q_jn [Qinv Qinv^T]_mn coeff[..., m, n]
        basis = self.spectrum.basis
        return np.einsum("m,n,mn,...mn->...", basis.q[i], basis.q[j], self._gram, coeff)

    def _pair_coeff(self, t, kind: str) -> np.ndarray:
        pair = np.add.outer(self.a, self.a)
        if kind == "exp":
            t_arr = np.asarray(t, dtype=float)
            return np.exp(np.multiply.outer(t_arr, pair))
        g = expm1_over(pair.reshape(-1), t)
        return g.reshape(g.shape[:-1] + pair.shape)


def build_propagator(topology, params: NetworkParams, mu: float) -> PropagatorHandle:
    """Spectral handle from a topology spec (closed form) or a realized matrix."""
    if isinstance(topology, WeightedAdjacency):
        if topology.m is None:
            raise NonInvariantTopology(
                "analytic propagator needs a uniform in-degree adjacency"
            )
        spectrum = dense_spectrum(topology)
        m = topology.m
    else:
        spectrum = spectrum_of(topology, params.lam)
        m = indegree_of(topology)
    return PropagatorHandle(
        spectrum=spectrum,
        tau=params.tau,
        sprime=float(sigmoid_d1(mu, params.sigmoid)),
        smu=float(sigmoid(mu, params.sigmoid)),
        m=m,
    )


def phi_entry(h: PropagatorHandle, i: int, j: int, t):
    """Phi_ij(t) for scalar or 1-d array t >= 0."""
    factors = np.exp(np.multiply.outer(np.asarray(t, dtype=float), h.a))
    return _scalarize(_as_real(factors @ h.weights(i, j), "phi entry"), t)


def phi_phiT_entry(h: PropagatorHandle, i: int, j: int, t):
    """[Phi(t) Phi(t)^T]_ij; each mode decays with twice the real part of a_k."""
    if isinstance(h.spectrum.basis, DenseNumeric):
        val = _as_real(h._pair_quadratic(i, j, h._pair_coeff(t, "exp")), "phi phi^T entry")
        return _scalarize(val, t)
    factors = np.exp(2.0 * np.multiply.outer(np.asarray(t, dtype=float), h.a.real))
    return _scalarize(_as_real(factors @ h.weights(i, j), "phi phi^T entry"), t)


def phi_time_integral(h: PropagatorHandle, i: int, j: int, t):
    """int_0^t Phi_ij(u) du; the a_k = 0 mode contributes linearly in t."""
    factors = expm1_over(h.a, t)
    return _scalarize(_as_real(factors @ h.weights(i, j), "phi time integral"), t)


def phi_phiT_time_integral(h: PropagatorHandle, i: int, j: int, t):
    """int_0^t [Phi(u) Phi(u)^T]_ij du."""
    if isinstance(h.spectrum.basis, DenseNumeric):
        val = _as_real(h._pair_quadratic(i, j, h._pair_coeff(t, "int")), "phi phi^T integral")
        return _scalarize(val, t)
    factors = expm1_over(2.0 * h.a.real, t)
    return _scalarize(_as_real(factors @ h.weights(i, j), "phi phi^T integral"), t)


def integral_pair_sum(h: PropagatorHandle, i: int, j: int, t):
    """sum_k {int_0^t Phi_ik} {int_0^t Phi_jk}, i.e. (P P^T)_ij for P = int Phi."""
    if isinstance(h.spectrum.basis, DenseNumeric):
        g = expm1_over(h.a, t)
        coeff = g[..., :, None] * g[..., None, :]
        return _scalarize(_as_real(h._pair_quadratic(i, j, coeff), "integral pair sum"), t)
    factors = np.abs(expm1_over(h.a, t)) ** 2
    return _scalarize(_as_real(factors @ h.weights(i, j), "integral pair sum"), t)


def row_sum(h: PropagatorHandle, t):
    """sum_j Phi_ij(t) = exp(a0 t); identical for every row."""
    val = _as_real(np.exp(np.asarray(t, dtype=float) * h.a0), "row sum")
    return _scalarize(val, t)


def row_sum_integral(h: PropagatorHandle, t):
    """sum_j int_0^t Phi_ij(u) du = g(a0, t)."""
    val = _as_real(expm1_over(np.array([h.a0]), t)[..., 0], "row sum integral")
    return _scalarize(val, t)


def row_sum_pair_integral(h: PropagatorHandle, t):
    """int_0^t (sum_k Phi_ik)(sum_l Phi_jl) du = g(2 a0, t)."""
    val = _as_real(expm1_over(np.array([2.0 * h.a0]), t)[..., 0], "row sum pair integral")
    return _scalarize(val, t)


def phi_matrix(h: PropagatorHandle, t: float) -> np.ndarray:
    """Full N x N Phi(t); materialized only on request."""
    basis = h.spectrum.basis
    d = np.exp(h.a * t)
    return _as_real(basis.q_matrix() @ np.diag(d) @ basis.q_inv(), "phi matrix")
