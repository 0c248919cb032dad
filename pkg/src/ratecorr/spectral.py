"""Closed-form spectra for the supported connectivity families.

Three eigenbasis descriptors cover every case:

* ``FourierBlock(r, s)`` -- block circulant matrices (N=r*s) are diagonalized
  by Q = F_r (x) F_s, the Kronecker product of the two DFT matrices; the
  eigenvalue at position k = i*s + j is the double DFT of the block first
  rows.  Q is unitary and symmetric, so Q^-1 = Q*.
* ``RealOrthogonal(q)`` -- symmetric matrices built from graph products of
  paths and cycles.  Complex cycle eigenvectors v are replaced by the real
  combinations (v+v*)/2 and (v-v*)/(2i) so q is a real orthogonal matrix.
* ``DenseNumeric(q, q_inv)`` -- a numerically diagonalized matrix; used as a
  cross-check route and for general diagonalizable effective matrices.

Eigenvalue ordering is part of the contract: k = i*s + j for block circulant,
lexicographic over factor indices for products.  Comparisons against numeric
eigensolvers must be multiset based (sort by (real, imag)) because repeated
eigenvalues make index-wise comparison ill-posed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ConfigError, IrregularDegree
from .topology import (
    BlockCirculantBand,
    Circulant,
    Cycle,
    GraphProduct,
    Path,
    WeightedAdjacency,
    _band_first_row,
    _heaviside,
    band_indegree,
)

__all__ = [
    "FourierBlock",
    "RealOrthogonal",
    "DenseNumeric",
    "Spectrum",
    "block_circulant_spectrum",
    "banded_eigenvalues",
    "product_spectrum",
    "path_eigensystem",
    "cycle_eigensystem",
    "dense_spectrum",
    "spectrum_of",
    "sigma1_spectrum",
    "indegree_of",
]


def _dft_matrix(k: int) -> np.ndarray:
    """[F_K]_ij = exp(2*pi*i*j/K * 1j) / sqrt(K); unitary and symmetric."""
    idx = np.arange(k)
    return np.exp(2j * np.pi * np.outer(idx, idx) / k) / np.sqrt(k)


@dataclass(frozen=True)
class FourierBlock:
    r: int
    s: int

    def q_matrix(self) -> np.ndarray:
        return np.kron(_dft_matrix(self.r), _dft_matrix(self.s))

    def q_inv(self) -> np.ndarray:
        return self.q_matrix().conj()


@dataclass(frozen=True)
class RealOrthogonal:
    q: np.ndarray

    def __post_init__(self):
        self.q.setflags(write=False)

    def q_matrix(self) -> np.ndarray:
        return self.q

    def q_inv(self) -> np.ndarray:
        return self.q.T


@dataclass(frozen=True)
class DenseNumeric:
    q: np.ndarray
    qinv: np.ndarray

    def __post_init__(self):
        self.q.setflags(write=False)
        self.qinv.setflags(write=False)

    def q_matrix(self) -> np.ndarray:
        return self.q

    def q_inv(self) -> np.ndarray:
        return self.qinv


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues plus an eigenbasis descriptor of a weighted adjacency."""

    eigenvalues: np.ndarray
    basis: object

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        """Q diag(e) Q^-1; exercised by tests against the realized matrix."""
        q = self.basis.q_matrix()
        return q @ np.diag(self.eigenvalues) @ self.basis.q_inv()


def indegree_of(spec) -> int:
    """Common in-degree of a spec without materializing the adjacency."""
    if isinstance(spec, Circulant):
        return sum(1 if 2 * o == spec.n else 2 for o in spec.offsets)
    if isinstance(spec, BlockCirculantBand):
        return band_indegree(spec.r, spec.s, spec.nu)
    if isinstance(spec, Path):
        if spec.n == 2:
            return 1
        raise IrregularDegree(
            f"path on {spec.n} nodes has boundary nodes of degree 1", rows=(0, spec.n - 1)
        )
    if isinstance(spec, Cycle):
        return 2
    if isinstance(spec, GraphProduct):
        degrees = [indegree_of(f) for f in spec.factors]
        if spec.op == "kronecker":
            return int(np.prod(degrees))
        return int(np.sum(degrees))
    raise ConfigError(f"not a topology spec: {spec!r}")


def block_circulant_spectrum(spec, lam: float) -> Spectrum:
    """Double-DFT eigenvalues of a (block) circulant spec, Fourier basis.

    e_{i*s+j} = (lam/M) * sum_{k<s} sum_{l<r} exp(2*pi*(jk/s + il/r)*1j) b_k^(l)
    """
    if isinstance(spec, Circulant):
        r, s = 1, spec.n
        rows = np.zeros((1, s))
        for o in spec.offsets:
            rows[0, o % s] = 1.0
            rows[0, (s - o) % s] = 1.0
        rows[0, 0] = 0.0
    elif isinstance(spec, BlockCirculantBand):
        r, s = spec.r, spec.s
        rows = np.stack([
            _band_first_row(s, spec.nu[l], 0.0 if l == 0 else 1.0) for l in range(r)
        ])
    else:
        raise ConfigError(f"not a (block) circulant spec: {spec!r}")
    m = indegree_of(spec)
    scale = lam / m if m > 0 else 0.0
    # rows[l, k] = b_k^(l); the +i convention DFT is N * ifft2.
    eig = np.fft.ifft2(rows) * (r * s) * scale
    return Spectrum(eig.ravel(), FourierBlock(r, s))


def banded_eigenvalues(r: int, s: int, nu, lam: float) -> np.ndarray:
    """Piecewise closed form for the banded block-circulant eigenvalues.

    f(n, nu_k, s) is the in-band DFT minus the diagonal contribution:
    the n=0 branch counts the band, nu_k = floor(s/2) collapses to -1, and
    the generic branch is the Dirichlet kernel ratio minus one.
    """
    spec = BlockCirculantBand(r, s, tuple(nu))  # validates the band
    m = band_indegree(r, s, spec.nu)

    def f(n: int, v: int) -> float:
        if n == 0:
            return 2 * v - _heaviside(v - s // 2 + (-1) ** s)
        if v == s // 2:
            return -1.0
        return np.sin(np.pi * n * (2 * v + 1) / s) / np.sin(np.pi * n / s) - 1.0

    eig = np.empty(r * s, dtype=complex)
    for mm in range(r):
        for n in range(s):
            acc = sum(np.exp(2j * np.pi * mm * k / r) * f(n, spec.nu[k]) for k in range(r))
            base = (r - 1 + acc) if mm == 0 else (-1 + acc)
            eig[mm * s + n] = lam / m * base
    return eig


def path_eigensystem(n: int):
    """Unit-weight path eigenquantities: e_i = 2 cos((i+1) pi / (n+1)),
    v_i[j] = sin((i+1)(j+1) pi / (n+1)), columns normalized."""
    i = np.arange(n)
    evals = 2 * np.cos((i + 1) * np.pi / (n + 1))
    j = np.arange(n)
    q = np.sin(np.outer(j + 1, i + 1) * np.pi / (n + 1))
    q /= np.linalg.norm(q, axis=0)
    return evals, q


def cycle_eigensystem(n: int):
    i = np.arange(n)
    evals = 2 * np.cos(2 * np.pi * i / n)
    j = np.arange(n)
    q = np.empty((n, n))
    q[:, 0] = 1.0 / np.sqrt(n)
    # Complex pair (i, n-i) shares an eigenvalue; replace by the real
    # combinations (v+v*)/2 -> cos and (v-v*)/(2i) -> sin.  i=0 and i=n/2
    # (n even) are already real and kept as-is.
    for i_ in range(1, (n + 1) // 2):
        c = np.cos(2 * np.pi * i_ * j / n)
        s_ = np.sin(2 * np.pi * i_ * j / n)
        q[:, i_] = c / np.linalg.norm(c)
        q[:, n - i_] = s_ / np.linalg.norm(s_)
    if n % 2 == 0:
        alt = np.cos(np.pi * j)
        q[:, n // 2] = alt / np.linalg.norm(alt)
    return evals, q


def product_spectrum(spec, lam: float) -> Spectrum:
    """Eigenvalues and a real orthogonal basis for path/cycle product specs.

    Kronecker combines factor eigenvalues multiplicatively, Cartesian
    additively; the basis is the Kronecker product of the factor bases.
    """
    def factor_system(f):
        if isinstance(f, Path):
            return path_eigensystem(f.n)
        if isinstance(f, Cycle):
            return cycle_eigensystem(f.n)
        if isinstance(f, GraphProduct):
            sub = [factor_system(g) for g in f.factors]
            evals = reduce(
                lambda a, b: (np.multiply.outer(a, b) if f.op == "kronecker"
                              else np.add.outer(a, b)).ravel(),
                [e for e, _ in sub],
            )
            q = reduce(np.kron, [qm for _, qm in sub])
            return evals, q
        raise ConfigError(f"not a product-spectrum spec: {f!r}")

    m = indegree_of(spec)  # raises IrregularDegree for bounded paths
    evals, q = factor_system(spec)
    scale = lam / m if m > 0 else 0.0
    return Spectrum(evals * scale, RealOrthogonal(q))


def dense_spectrum(adj: WeightedAdjacency) -> Spectrum:
    """Numeric eigendecomposition; cross-check route, not a closed form."""
    if adj.m is None:
        raise IrregularDegree("dense spectrum of an irregular adjacency is out of scope")
    mat = adj.matrix
    if np.allclose(mat, mat.T):
        evals, q = np.linalg.eigh(mat)
        return Spectrum(evals.astype(complex), RealOrthogonal(q))
    evals, q = np.linalg.eig(mat)
    return Spectrum(evals, DenseNumeric(q, np.linalg.inv(q)))


def spectrum_of(spec, lam: float) -> Spectrum:
    """Closed-form spectrum dispatcher over the topology spec families."""
    if isinstance(spec, (Circulant, BlockCirculantBand)):
        return block_circulant_spectrum(spec, lam)
    if isinstance(spec, (Path, Cycle, GraphProduct)):
        return product_spectrum(spec, lam)
    raise ConfigError(f"not a topology spec: {spec!r}")


def sigma1_spectrum(n: int, c1: float) -> np.ndarray:
    """Eigenvalues of the Brownian correlation matrix: 1+c1(n-1) once, 1-c1 else."""
    if n < 2:
        raise ConfigError(f"need n >= 2, got {n}")
    out = np.full(n, 1.0 - c1)
    out[0] = 1.0 + c1 * (n - 1)
    return out
