"""Structured connectivity matrices with uniform in-degree.

Three families are supported, all described by small immutable specs:

* ``Circulant(n, offsets)`` -- circulant graphs C_n(o_1, ..., o_q), including
  the cycle (offsets={1}) and the complete graph (offsets={1..n//2}).
* ``BlockCirculantBand(r, s, nu)`` -- r populations of s neurons each, where
  population blocks are symmetric circulant band matrices with half-widths
  nu[i]; the diagonal of the whole matrix is zero.
* ``GraphProduct(op, factors)`` -- Kronecker or Cartesian products of paths
  and cycles (circular ladders, tori, hypercubes, ...).

``realize`` turns a spec into a dense weighted matrix whose nonzero entries
all equal lam/M, M being the common in-degree.  Products involving paths of
length > 2 have boundary nodes with a smaller degree; those are rejected
unless ``allow_irregular=True``, in which case each row is scaled by its own
in-degree and the result is unusable for the analytic covariance machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Union

import numpy as np

from .errors import BadBand, ConfigError, IrregularDegree, SelfLoop

__all__ = [
    "Circulant",
    "BlockCirculantBand",
    "Path",
    "Cycle",
    "GraphProduct",
    "TopologySpec",
    "WeightedAdjacency",
    "complete",
    "cycle",
    "realize",
    "band_block_circulant",
    "band_indegree",
    "validate_regularity",
    "spec_from_config",
    "spec_to_config",
]


def _heaviside(x: float) -> int:
    return 1 if x > 0 else 0


@dataclass(frozen=True)
class Circulant:
    """Circulant graph C_n(offsets); every offset o in 1..floor(n/2)."""

    n: int
    offsets: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "offsets", frozenset(int(o) for o in self.offsets))
        if self.n < 1:
            raise ConfigError(f"circulant needs n >= 1, got {self.n}")
        for o in self.offsets:
            if not 1 <= o <= self.n // 2:
                raise ConfigError(
                    f"circulant offset {o} outside 1..{self.n // 2} for n={self.n}"
                )

    @property
    def node_count(self) -> int:
        return self.n


@dataclass(frozen=True)
class BlockCirculantBand:
    """Block circulant matrix (N=r*s) with symmetric circulant band blocks."""

    r: int
    s: int
    nu: tuple

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(int(v) for v in self.nu))
        if self.r < 1:
            raise BadBand(f"need r >= 1, got {self.r}")
        if self.s < 3:
            raise BadBand(f"band structure needs s >= 3, got {self.s}")
        if len(self.nu) != self.r:
            raise BadBand(f"need one band half-width per population: {len(self.nu)} != {self.r}")
        for v in self.nu:
            if not 1 <= v <= self.s // 2:
                raise BadBand(f"half-width {v} outside 1..{self.s // 2} for s={self.s}")

    @property
    def node_count(self) -> int:
        return self.r * self.s


@dataclass(frozen=True)
class Path:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"path needs n >= 2, got {self.n}")

    @property
    def node_count(self) -> int:
        return self.n


@dataclass(frozen=True)
class Cycle:
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"cycle needs n >= 3, got {self.n}")

    @property
    def node_count(self) -> int:
        return self.n


@dataclass(frozen=True)
class GraphProduct:
    """Right-associated product over Path/Cycle factors; op in {kronecker, cartesian}."""

    op: str
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.op not in ("kronecker", "cartesian"):
            raise ConfigError(f"unknown product op {self.op!r}")
        if len(self.factors) < 2:
            raise ConfigError("graph product needs at least two factors")

    @property
    def node_count(self) -> int:
        n = 1
        for f in self.factors:
            n *= f.node_count
        return n


TopologySpec = Union[Circulant, BlockCirculantBand, GraphProduct]


def complete(n: int) -> Circulant:
    """Complete graph K_n as the circulant C_n(1, ..., floor(n/2))."""
    return Circulant(n, frozenset(range(1, n // 2 + 1)))


def cycle(n: int) -> Circulant:
    """Cycle graph Cy_n as the circulant C_n(1)."""
    return Circulant(n, frozenset({1}))


@dataclass(frozen=True)
class WeightedAdjacency:
    """Dense weighted connectivity: nonzero entries lam/M, zero diagonal.

    ``m`` is None for adjacencies realized with allow_irregular=True; such
    matrices may be simulated but are rejected by the analytic machinery.
    """

    matrix: np.ndarray
    lam: float
    m: int | None
    spec: object = None

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def mask(self) -> np.ndarray:
        return self.matrix != 0.0


def _band_first_row(s: int, nu: int, diag: float) -> np.ndarray:
    # First row of a symmetric circulant band block: ones on 1..nu and on
    # rho..s-1, where rho folds the band back so the wrap-around never double
    # counts an entry (the Heaviside correction handles nu = floor(s/2)).
    rho = s - nu + _heaviside(nu - s // 2 + (-1) ** s)
    row = np.zeros(s)
    row[0] = diag
    for j in range(1, s):
        if 1 <= j <= nu or rho <= j <= s - 1:
            row[j] = 1.0
    return row


def band_indegree(r: int, s: int, nu) -> int:
    """Common in-degree of the banded block-circulant network."""
    nu = tuple(nu)
    return r - 1 + sum(2 * v - _heaviside(v - s // 2 + (-1) ** s) for v in nu)


def _circulant_from_row(row: np.ndarray) -> np.ndarray:
    s = len(row)
    idx = (np.arange(s)[None, :] - np.arange(s)[:, None]) % s
    return row[idx]


def _unit_adjacency(spec) -> np.ndarray:
    """0/1 adjacency for a spec (no weight scaling)."""
    if isinstance(spec, Circulant):
        row = np.zeros(spec.n)
        for o in spec.offsets:
            row[o % spec.n] = 1.0
            row[(spec.n - o) % spec.n] = 1.0
        row[0] = 0.0
        return _circulant_from_row(row)
    if isinstance(spec, BlockCirculantBand):
        rows = [
            _band_first_row(spec.s, spec.nu[l], 0.0 if l == 0 else 1.0)
            for l in range(spec.r)
        ]
        blocks = [_circulant_from_row(r) for r in rows]
        n = spec.r * spec.s
        adj = np.zeros((n, n))
        for p in range(spec.r):
            for q in range(spec.r):
                adj[p * spec.s:(p + 1) * spec.s, q * spec.s:(q + 1) * spec.s] = \
                    blocks[(q - p) % spec.r]
        return adj
    if isinstance(spec, Path):
        return np.diag(np.ones(spec.n - 1), 1) + np.diag(np.ones(spec.n - 1), -1)
    if isinstance(spec, Cycle):
        return _unit_adjacency(Circulant(spec.n, frozenset({1})))
    if isinstance(spec, GraphProduct):
        mats = [_unit_adjacency(f) for f in spec.factors]
        if spec.op == "kronecker":
            return reduce(lambda a, b: np.kron(a, b), mats)

        def cart(a, b):
            return np.kron(a, np.eye(b.shape[0])) + np.kron(np.eye(a.shape[0]), b)

        # right-associated fold: a x (b x (c x ...))
        return reduce(lambda b, a: cart(a, b), reversed(mats))
    raise ConfigError(f"not a topology spec: {spec!r}")


def validate_regularity(adj) -> int:
    """Return the common in-degree M, or raise IrregularDegree naming bad rows.

    Accepts a WeightedAdjacency or any square matrix; only the zero pattern
    matters.
    """
    matrix = adj.matrix if isinstance(adj, WeightedAdjacency) else np.asarray(adj)
    degrees = (matrix != 0.0).sum(axis=1)
    m = int(degrees[0])
    if not np.all(degrees == m):
        majority = int(np.bincount(degrees).argmax())
        rows = np.flatnonzero(degrees != majority)
        raise IrregularDegree(
            f"in-degree not uniform: rows {rows.tolist()} have degrees "
            f"{degrees[rows].tolist()} while most rows have {majority}",
            rows=rows.tolist(),
        )
    return m


def realize(spec, lam: float, allow_irregular: bool = False) -> WeightedAdjacency:
    """Dense weighted matrix for a topology spec: lam/M on connections.

    Raises SelfLoop / IrregularDegree / BadBand on invalid structures; with
    allow_irregular=True an irregular product is scaled per row by its own
    in-degree instead (m=None marks it off-limits for analytic operations).
    """
    unit = _unit_adjacency(spec)
    if np.any(np.diag(unit) != 0.0):
        raise SelfLoop("realized adjacency has nonzero diagonal entries")
    try:
        m = validate_regularity(unit)
    except IrregularDegree:
        if not allow_irregular:
            raise
        degrees = unit.sum(axis=1)
        scale = np.divide(lam, degrees, out=np.zeros_like(degrees), where=degrees > 0)
        return WeightedAdjacency(unit * scale[:, None], lam, None, spec)
    weighted = unit * (lam / m) if m > 0 else np.zeros_like(unit)
    return WeightedAdjacency(weighted, lam, m, spec)


def band_block_circulant(r: int, s: int, nu, lam: float) -> WeightedAdjacency:
    """Banded block-circulant connectivity; M follows the closed-form count."""
    adj = realize(BlockCirculantBand(r, s, tuple(nu)), lam)
    expected = band_indegree(r, s, nu)
    assert adj.m == expected, f"in-degree mismatch: counted {adj.m}, formula {expected}"
    return adj


# --- config-file (de)serialization -----------------------------------------

def spec_to_config(spec) -> dict:
    if isinstance(spec, Circulant):
        return {"kind": "circulant", "n": spec.n, "offsets": sorted(spec.offsets)}
    if isinstance(spec, BlockCirculantBand):
        return {"kind": "block_band", "r": spec.r, "s": spec.s, "nu": list(spec.nu)}
    if isinstance(spec, Path):
        return {"path": spec.n}
    if isinstance(spec, Cycle):
        return {"cycle": spec.n}
    if isinstance(spec, GraphProduct):
        return {"kind": spec.op, "factors": [spec_to_config(f) for f in spec.factors]}
    raise ConfigError(f"not a topology spec: {spec!r}")


def spec_from_config(cfg: dict):
    """Parse a topology out of a config mapping.

    Accepts {"kind": ...} records plus the terse factor forms {"cycle": n}
    and {"path": n}.
    """
    if not isinstance(cfg, dict):
        raise ConfigError(f"topology config must be a mapping, got {cfg!r}")
    if "cycle" in cfg and "kind" not in cfg:
        return Cycle(int(cfg["cycle"]))
    if "path" in cfg and "kind" not in cfg:
        return Path(int(cfg["path"]))
    kind = cfg.get("kind")
    if kind == "circulant":
        return Circulant(int(cfg["n"]), frozenset(int(o) for o in cfg["offsets"]))
    if kind == "complete":
        return complete(int(cfg["n"]))
    if kind == "cycle":
        return Cycle(int(cfg["n"]))
    if kind == "path":
        return Path(int(cfg["n"]))
    if kind == "block_band":
        return BlockCirculantBand(int(cfg["r"]), int(cfg["s"]), tuple(cfg["nu"]))
    if kind in ("cartesian", "kronecker"):
        return GraphProduct(kind, tuple(spec_from_config(f) for f in cfg["factors"]))
    raise ConfigError(f"unknown topology kind {kind!r}")
