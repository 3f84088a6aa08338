"""Exact leakage accounting for random-binning key agreement on toy sources.

A :class:`ToySource` is a single-letter joint pmf ``p(x, y, z)`` for one fixed
state pair; blocks of length ``n`` are i.i.d.  Sequences are indexed in
row-major (big-endian) order, so the block pmf is an ``n``-fold Kronecker
power of the single-letter table.  Every quantity in :class:`LeakageReport`
is computed by exhaustive summation, no sampling.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from .core_model import make_rng

__all__ = [
    "ToySource",
    "BinningScheme",
    "LeakageReport",
    "entropy",
    "binary_entropy",
    "bsc_cascade",
    "conditional_capacity_discrete",
    "random_binning",
    "evaluate",
    "check_leakage_bound",
    "fano_bound",
    "MAX_TABLE_CELLS",
]

MAX_TABLE_CELLS = 1 << 22
_DEGRADED_TOL = 1e-10


def entropy(p) -> float:
    """Shannon entropy in bits of an array of probabilities (any shape)."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    # a lone mass of 1 - eps can round to a tiny negative value
    return max(0.0, float(-np.sum(p * np.log2(p))))


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])


@dataclass(frozen=True)
class ToySource:
    """Single-letter joint pmf ``table[x, y, z]`` of a discrete source."""

    table: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 3:
            raise ValueError("table must be indexed as [x, y, z]")
        if max(t.shape) > 4:
            raise ValueError("alphabets are limited to 4 symbols")
        if np.any(t < 0) or abs(t.sum() - 1.0) > 1e-12:
            raise ValueError("table must be a normalized pmf")
        object.__setattr__(self, "table", t)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.table.shape

    @property
    def p_xy(self) -> np.ndarray:
        return self.table.sum(axis=2)

    @property
    def p_xz(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def degraded(self) -> bool:
        """Whether ``p(x,y,z) = p(x,y) p(z|y)``, i.e. Eve is a cascade of Bob."""
        p_yz = self.table.sum(axis=0)
        p_y = p_yz.sum(axis=1)
        p_z_given_y = np.divide(p_yz, p_y[:, None], out=np.zeros_like(p_yz), where=p_y[:, None] > 0)
        cascade = self.p_xy[:, :, None] * p_z_given_y[None, :, :]
        return bool(np.max(np.abs(cascade - self.table)) <= _DEGRADED_TOL)

    @classmethod
    def from_csv(cls, path) -> "ToySource":
        """Load a table from CSV with columns ``x,y,z,p`` (0-based symbols)."""
        rows = []
        with open(Path(path), newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((int(row["x"]), int(row["y"]), int(row["z"]), float(row["p"])))
        if not rows:
            raise ValueError("empty source table")
        shape = tuple(max(r[i] for r in rows) + 1 for i in range(3))
        table = np.zeros(shape)
        for x, y, z, p in rows:
            table[x, y, z] += p
        return cls(table)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "y", "z", "p"])
            for (x, y, z), p in np.ndenumerate(self.table):
                writer.writerow([x, y, z, repr(float(p))])


def bsc_cascade(p_xy: float = 0.1, p_yz: float = 0.2) -> ToySource:
    """Uniform bit ``X``, ``Y = X xor Bern(p_xy)``, ``Z = Y xor Bern(p_yz)``."""
    table = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            for z in range(2):
                table[x, y, z] = (
                    0.5
                    * (p_xy if x != y else 1 - p_xy)
                    * (p_yz if y != z else 1 - p_yz)
                )
    return ToySource(table)


def _mutual_information(joint: np.ndarray) -> float:
    return entropy(joint.sum(axis=1)) + entropy(joint.sum(axis=0)) - entropy(joint)


def conditional_capacity_discrete(src: ToySource) -> float:
    """``I(X;Y) - I(X;Z)`` in bits for the single-letter table."""
    return _mutual_information(src.p_xy) - _mutual_information(src.p_xz)


def _n_bins(n: int, rate: float) -> int:
    # 2 ** (n * rate) is often an integer up to rounding, e.g. 2 ** (4 * 0.25)
    return max(1, math.ceil(2.0 ** (n * rate) * (1 - 1e-12)))


@dataclass(frozen=True)
class BinningScheme:
    """One-way key agreement by binning Alice's block ``x^n``.

    ``key_map[i]`` and ``public_map[i]`` are the key and public-message indices
    of the ``i``-th sequence.  Bob decodes by MAP search over the sequences in
    the announced public bin and applies ``key_map`` to his estimate.
    """

    n: int
    key_rate: float
    public_rate: float
    key_map: np.ndarray
    public_map: np.ndarray
    alphabet_size: int = 2
    decoder: str = "map"

    def __post_init__(self) -> None:
        size = self.alphabet_size**self.n
        for name in ("key_map", "public_map"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (size,):
                raise ValueError(f"{name} must assign an index to each of the {size} sequences")
            if np.any(arr < 0):
                raise ValueError(f"{name} indices must be nonnegative")
            object.__setattr__(self, name, arr)
        if self.decoder != "map":
            raise ValueError("only the 'map' decoder is implemented")

    @property
    def n_keys(self) -> int:
        return _n_bins(self.n, self.key_rate)

    @property
    def n_public(self) -> int:
        return _n_bins(self.n, self.public_rate)

    @classmethod
    def from_maps(cls, n: int, key_map, public_map, alphabet_size: int = 2) -> "BinningScheme":
        """Wrap explicit maps; nominal rates are inferred from the index ranges."""
        key_map = np.asarray(key_map)
        public_map = np.asarray(public_map)
        return cls(
            n,
            math.log2(int(key_map.max()) + 1) / n,
            math.log2(int(public_map.max()) + 1) / n,
            key_map,
            public_map,
            alphabet_size,
        )


def random_binning(n: int, R: float, R_phi: float, seed, alphabet_size: int = 2) -> BinningScheme:
    """Draw key and public bins uniformly and independently for every sequence.

    When there are at least as many public indices as sequences, the public
    map is drawn without replacement so every public bin is a singleton.
    """
    if n < 1 or n * R < 0 or n * R_phi < 0:
        raise ValueError("need n >= 1 and nonnegative rates")
    rng = make_rng(seed)
    size = alphabet_size**n
    n_keys = _n_bins(n, R)
    n_pub = _n_bins(n, R_phi)
    key_map = rng.integers(0, n_keys, size=size)
    if n_pub >= size:
        public_map = rng.permutation(n_pub)[:size]
    else:
        public_map = rng.integers(0, n_pub, size=size)
    return BinningScheme(n, R, R_phi, key_map, public_map, alphabet_size)


@dataclass(frozen=True)
class LeakageReport:
    """Exact per-symbol figures of one scheme on one source (bits)."""

    n: int
    pe: float
    key_entropy: float
    leak: float
    residual: float
    cs: float
    pe_sequence: float
    x_leak: float
    degraded: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _block_pmf(pair: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.kron, [pair] * n)


def _aggregate_rows(mat: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Sum rows of ``mat`` sharing a label; labels are compressed first."""
    _, inverse = np.unique(labels, return_inverse=True)
    out = np.zeros((inverse.max() + 1, mat.shape[1]))
    np.add.at(out, inverse, mat)
    return out


def _map_decode(p_xy: np.ndarray, public_map: np.ndarray) -> np.ndarray:
    """``xhat[i, j]``: MAP estimate of x given ``(public_map[i], y_j)``.

    Within a bin the first maximizer (lowest sequence index) wins.
    """
    xhat = np.empty(p_xy.shape, dtype=np.int64)
    order = np.argsort(public_map, kind="stable")
    bounds = np.flatnonzero(np.diff(public_map[order])) + 1
    for members in np.split(order, bounds):
        best = members[np.argmax(p_xy[members], axis=0)]
        xhat[members] = best[None, :]
    return xhat


def evaluate(scheme: BinningScheme, src: ToySource) -> LeakageReport:
    """Exact error probability, key entropy, leakage and residual uncertainty.

    Raises
    ------
    ValueError
        If the block tables would exceed :data:`MAX_TABLE_CELLS` entries or the
        alphabet size disagrees with the scheme.
    """
    nx, ny, nz = src.sizes
    n = scheme.n
    if nx != scheme.alphabet_size:
        raise ValueError("scheme alphabet does not match the source's X alphabet")
    if (nx * max(ny, nz)) ** n > MAX_TABLE_CELLS:
        raise ValueError(f"block length {n} is too large for exhaustive evaluation")

    p_xy = _block_pmf(src.p_xy, n)
    p_xz = _block_pmf(src.p_xz, n)
    p_x = p_xy.sum(axis=1)
    kmap, gmap = scheme.key_map, scheme.public_map

    xhat = _map_decode(p_xy, gmap)
    seq_err = xhat != np.arange(xhat.shape[0])[:, None]
    key_err = kmap[xhat] != kmap[:, None]
    pe_seq = float(np.sum(p_xy[seq_err]))
    pe_key = float(np.sum(p_xy[key_err]))

    h_k = entropy(np.bincount(kmap, weights=p_x))
    p_phi_z = _aggregate_rows(p_xz, gmap)
    p_k_phi_z = _aggregate_rows(p_xz, kmap * (int(gmap.max()) + 1) + gmap)
    leak = h_k + entropy(p_phi_z) - entropy(p_k_phi_z)
    x_leak = entropy(p_x) + entropy(p_phi_z) - entropy(p_xz)
    residual = entropy(p_xy) - entropy(_aggregate_rows(p_xy, gmap))

    return LeakageReport(
        n=n,
        pe=pe_key,
        key_entropy=h_k / n,
        leak=max(leak, 0.0) / n,
        residual=max(residual, 0.0) / n,
        cs=conditional_capacity_discrete(src),
        pe_sequence=pe_seq,
        x_leak=max(x_leak, 0.0) / n,
        degraded=src.degraded,
    )


def check_leakage_bound(report: LeakageReport, tol: float = 1e-12) -> tuple[bool, float]:
    """Check ``leak >= key_entropy - residual - cs`` for a degraded source.

    Under degradedness every step from the leakage to the right-hand side is an
    identity or a data-processing inequality, so this holds for any scheme and
    any block length.  Returns ``(holds, slack)`` with ``slack = leak - rhs``.
    """
    if not report.degraded:
        raise ValueError("the leakage lower bound requires a degraded source")
    slack = report.leak - (report.key_entropy - report.residual - report.cs)
    return slack >= -tol, slack


def fano_bound(report: LeakageReport, alphabet_size: int = 2) -> float:
    """Fano upper bound on ``residual`` from the sequence error probability."""
    pe = report.pe_sequence
    return binary_entropy(pe) / report.n + pe * math.log2(alphabet_size)
