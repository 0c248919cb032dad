"""Taylor radius of convergence of the sigmoid and arctangent activations.

High-order sigmoid derivatives follow the Eulerian-number identity

    S^(n)(x) = lam^n sum_{k=1}^{n} (-1)^(k-1) A(n, k-1) S^k (1-S)^(n+1-k)
             = (-lam)^n Li_{-n}(-e^(-lam x)),   x > 0,

with the negative-order polylogarithm given by the finite Eulerian sum
Li_{-n}(z) = [sum_k A(n, k) z^(n-k)] / (1-z)^(n+1).  The normalization here
is t_max = 1, v_t = 0; reflection S^(n)(-x) = (-1)^(n-1) S^(n)(x) covers
x < 0, and at x = 0 the Bernoulli identity
S^(n)(0) = lam^n (2^(n+1) - 1) B_{n+1} / (n+1) takes over.

The alternating Eulerian sum cancels catastrophically in double precision
(terms exceed the result by hundreds of orders of magnitude once n reaches
the hundreds), so it is evaluated in arbitrary precision with a working
precision chosen adaptively from the observed cancellation.  Derivative
magnitudes are carried as (sign, ln|value|) pairs; nothing silently
overflows.

The radius comes from the Cauchy root test,
R = 1 / limsup (|S^(n)(x0)| / n!)^(1/n), with the limsup estimated as the
maximum of the root sequence over the last quarter of the computed orders
(vanishing orders are skipped; at x0 = 0 only odd orders survive because
odd Bernoulli numbers vanish).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from .errors import ConfigError, NonConvergent

__all__ = [
    "SignedLog",
    "DerivativeTable",
    "eulerian",
    "eulerian_row",
    "bernoulli",
    "bernoulli_log_abs",
    "sigmoid_derivative_at",
    "derivative_table",
    "sigmoid_radius",
    "arctangent_radius",
]

LN2 = math.log(2.0)

_rows: list = [[1]]  # row n holds A(n, 0..n-1) for n >= 1; A(0, 0) = 1


def eulerian_row(n: int) -> list:
    """Row n of the Eulerian triangle, exact integers."""
    if n < 0:
        raise ConfigError("need n >= 0")
    while len(_rows) <= n:
        m = len(_rows)
        prev = _rows[m - 1]
        if m == 1:
            _rows.append([1])
            continue
        row = [0] * m
        for k in range(m):
            left = prev[k] if k < len(prev) else 0
            right = prev[k - 1] if k >= 1 else 0
            row[k] = (k + 1) * left + (m - k) * right
        _rows.append(row)
    return _rows[n]


def eulerian(n: int, k: int) -> int:
    """A(n, k) by the recurrence A(n,k) = (k+1) A(n-1,k) + (n-k) A(n-1,k-1)."""
    if n == 0 and k == 0:
        return 1
    if not 0 <= k < n:
        raise ConfigError(f"need 0 <= k < n, got (n, k) = ({n}, {k})")
    return eulerian_row(n)[k]


def bernoulli(n: int) -> Fraction:
    """Exact Bernoulli number B_n (convention B_1 = -1/2).

    Even values come from the alternating Eulerian row sum
    sum_k (-1)^(k-1) A(n, k-1) = 2^(n+1) (2^(n+1) - 1) B_{n+1} / (n+1);
    odd values beyond B_1 vanish.
    """
    if n < 0:
        raise ConfigError("need n >= 0")
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(-1, 2)
    if n % 2 == 1:
        return Fraction(0)
    m = n - 1
    alt = sum((-1) ** (k - 1) * eulerian(m, k - 1) for k in range(1, m + 1))
    return Fraction(alt * n, 2 ** n * (2 ** n - 1))


def bernoulli_log_abs(n: int) -> float:
    """ln |B_n| for even n; exact rationals up to 64, the zeta representation
    |B_2m| = 2 (2m)! zeta(2m) / (2 pi)^(2m) beyond (zeta(2m) - 1 < 1e-19 there)."""
    if n < 2 or n % 2:
        raise ConfigError("log-magnitude path expects even n >= 2")
    if n <= 64:
        b = bernoulli(n)
        return math.log(abs(b.numerator)) - math.log(b.denominator)
    zeta = 1.0 + 2.0 ** (-n)
    return LN2 + math.lgamma(n + 1) - n * math.log(2.0 * math.pi) + math.log(zeta)


@dataclass(frozen=True)
class SignedLog:
    """A real number as (sign, ln|value|); sign 0 encodes exactly zero."""

    sign: int
    log_abs: float

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)  # may overflow, by design


def _derivative_at_zero(lam: float, n: int) -> SignedLog:
    # S^(n)(0) = lam^n (2^(n+1) - 1) B_{n+1} / (n+1); zero for even n >= 2.
    if n % 2 == 0:
        return SignedLog(0, -math.inf)
    m = n + 1
    sign = 1 if (m // 2) % 2 == 1 else -1  # B_2m has sign (-1)^(m+1)
    log_abs = n * math.log(lam) + (n + 1) * LN2 + math.log1p(-2.0 ** (-(n + 1))) \
        + bernoulli_log_abs(m) - math.log(m)
    return SignedLog(sign, log_abs)


def _derivative_positive(lam: float, x0: float, n: int) -> SignedLog:
    """(-lam)^n Li_{-n}(-e^(-lam x0)) for x0 > 0, adaptive precision."""
    row = eulerian_row(n)
    lz = -lam * x0  # ln|z|
    # bit_length approximates ln A(n,k) well enough to size the precision
    max_term = max((row[k].bit_length() - 1) * LN2 + (n - k) * lz for k in range(n))
    dps = 30
    for _ in range(6):
        with mp.workdps(dps):
            z = -mp.e ** (mp.mpf(lam) * mp.mpf(-x0))
            acc = mp.mpf(0)
            zp = z
            for k in range(n - 1, -1, -1):
                acc += row[k] * zp
                zp *= z
            if acc == 0:
                dps *= 4
                continue
            cancel = (max_term - float(mp.log(abs(acc)))) / math.log(10.0)
            needed = int(max(0.0, cancel)) + 25
            if dps >= needed:
                # 1 - z > 1, so the division changes magnitude, never sign
                li_log = float(mp.log(abs(acc))) - (n + 1) * float(mp.log(1 - z))
                sign = 1 if acc > 0 else -1
                if n % 2 == 1:
                    sign = -sign
                return SignedLog(sign, n * math.log(lam) + li_log)
            dps = needed
    raise NonConvergent(f"polylogarithm sum did not stabilize at order {n}")


def sigmoid_derivative_at(x0: float, lam: float, n: int) -> SignedLog:
    """n-th derivative of the unit sigmoid at x0 as a signed log-magnitude.

    Routes: Bernoulli identity at x0 = 0, Eulerian polylogarithm sum for
    x0 > 0, reflection S^(n)(-x) = (-1)^(n-1) S^(n)(x) for x0 < 0.
    """
    if lam <= 0:
        raise ConfigError("need lam > 0")
    if n < 0:
        raise ConfigError("need n >= 0")
    if n == 0:
        arg = -lam * x0
        log_s = -math.log1p(math.exp(arg)) if arg < 0 else arg - math.log1p(math.exp(arg)) \
            if arg < 700 else arg
        return SignedLog(1, log_s)
    if x0 == 0.0:
        return _derivative_at_zero(lam, n)
    if x0 > 0.0:
        return _derivative_positive(lam, x0, n)
    ref = _derivative_positive(lam, -x0, n)
    flip = 1 if n % 2 == 1 else -1
    return SignedLog(ref.sign * flip, ref.log_abs)


@dataclass(frozen=True)
class DerivativeTable:
    """S^(n)(x0) for n = 1..n_max in the overflow-safe representation."""

    x0: float
    lam: float
    entries: tuple   # SignedLog for orders 1..n_max

    def __getitem__(self, n: int) -> SignedLog:
        return self.entries[n - 1]

    @property
    def n_max(self) -> int:
        return len(self.entries)


def derivative_table(x0: float, lam: float, n_max: int) -> DerivativeTable:
    return DerivativeTable(x0, lam, tuple(
        sigmoid_derivative_at(x0, lam, n) for n in range(1, n_max + 1)))


def sigmoid_radius(x0: float, lam: float, n_max: int = 512,
                   stability_tol: float = 0.10) -> float:
    """Taylor radius of the unit sigmoid about x0 via the Cauchy root test.

    NonConvergent is raised when the last-quarter window of the root
    sequence disagrees with the preceding quarter by more than
    stability_tol (relative).
    """
    if n_max < 64:
        raise ConfigError("need n_max >= 64 for a stable tail window")
    table = derivative_table(x0, lam, n_max)
    log_roots = np.full(n_max + 1, -math.inf)
    for n in range(1, n_max + 1):
        entry = table[n]
        if entry.sign == 0:
            continue
        log_roots[n] = (entry.log_abs - math.lgamma(n + 1)) / n
    lo, mid = n_max // 2, (3 * n_max) // 4
    r_prev = math.exp(-log_roots[lo:mid].max())
    r_tail = math.exp(-log_roots[mid:].max())
    if abs(r_tail - r_prev) > stability_tol * r_tail:
        raise NonConvergent(
            f"root-test tail not stable: windows give {r_prev:.4g} vs {r_tail:.4g}")
    return r_tail


def arctangent_radius(x0: float, lam: float) -> float:
    """Closed form for arctan(lam x): R(x0) = sqrt(1 + (lam x0)^2) / lam."""
    if lam <= 0:
        raise ConfigError("need lam > 0")
    return math.sqrt(1.0 + (lam * x0) ** 2) / lam
