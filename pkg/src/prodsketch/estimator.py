"""Median-of-means bank of independently seeded sketch instances.

A bank holds an s2 x s1 grid of instances.  Each group of s1 instances is
averaged, and the median of the s2 group means is the (1 +- eps, delta)
estimate of the squared L2 distance between the stream's joint distribution
and the product of its marginals.

Shape derivation: per-group Chebyshev needs Var[group mean] <= E^2/8, and
the variance of one instance is at most (3^k - 1) E^2, so

    s1 = ceil(8 * (3^k - 1) / eps^2)        s2 = ceil(2 * ln(1/delta))

An opt-in paper-constants mode pins s1 = ceil(72 / eps^2) at k = 2, the
conventional constant for the two-dimensional case; for k != 2 it falls
back to the derived formula.

The bank stores counters in flat numpy int64 arrays (cells row-major by
(group, index)) and ingests in chunks, which is arithmetically identical to
applying ``SketchInstance.update_item`` per item per cell; ``instance_view``
materializes any cell as a ``SketchInstance`` for inspection.  Ingestion is
single-writer; estimation is read-only.

Snapshot format (version 1, little-endian), independence mode only:

    magic  b"PSKBANK1"
    header <8q>: version=1, k, n, width, s1, s2, master_seed (as signed
           64-bit bit pattern), mode (0 = independence)
    body   s2*s1 cell records, row-major (group, index), each <q>-packed:
           t1, marginal_sums[0..k-1], m

Round-trips are bit-exact; hash seeds are re-derived from master_seed.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .field import FieldSpec
from .hashing import (
    MAX_GROUP,
    MAX_INDEX,
    batch_sign_eval,
    derive_coefficients_batch,
    derive_hashes,
)
from .sketch import EmptyStreamError, Mode, SketchConfig, SketchInstance

_MAGIC = b"PSKBANK1"
_HEADER = struct.Struct("<8q")
_SNAPSHOT_VERSION = 1

# Above this many table entries the bank evaluates hashes per chunk instead
# of precomputing sign tables (2^26 int8 entries = 64 MiB).
_SIGN_TABLE_ENTRY_LIMIT = 1 << 26

_CHUNK_ITEMS = 8192


@dataclass(frozen=True)
class AccuracyParams:
    """Target relative error and failure probability.

    epsilon is accepted up to and including 1.0 so that the unit-error
    shapes (s1 = 64 derived, 72 in paper-constants mode) remain
    constructible.
    """

    epsilon: float
    delta: float

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class BankShape:
    s1: int
    s2: int

    def __post_init__(self) -> None:
        if not (1 <= self.s1 <= MAX_INDEX):
            raise ValueError(f"s1 must be in [1, {MAX_INDEX}]")
        if not (1 <= self.s2 <= MAX_GROUP):
            raise ValueError(f"s2 must be in [1, {MAX_GROUP}]")

    @property
    def cells(self) -> int:
        return self.s1 * self.s2


@dataclass(frozen=True)
class Estimate:
    l2_squared: float
    l2: float


@dataclass(frozen=True)
class StateSize:
    """Counter and seed accounting: cells*(k+1) counters, cells*k*4 seeds."""

    counters: int
    seeds: int


def derive_shape(
    params: AccuracyParams, k: int, *, paper_constants: bool = False
) -> BankShape:
    """Grid shape meeting the (1 +- eps, delta) guarantee for k dimensions.

    The ceilings are evaluated in exact rational arithmetic (s1) and with a
    1e-12 slack (s2) so boundary cases like delta = e^-2 -> s2 = 4 do not
    depend on libm rounding.
    """
    if paper_constants and k == 2:
        s1 = math.ceil(Fraction(72) / Fraction(params.epsilon) ** 2)
    else:
        s1 = math.ceil(Fraction(8 * (3**k - 1)) / Fraction(params.epsilon) ** 2)
    s2 = max(1, math.ceil(2.0 * math.log(1.0 / params.delta) - 1e-12))
    return BankShape(s1=s1, s2=s2)


def _median_lower(values: np.ndarray) -> float:
    """Median with the documented tie rule: lower-middle order statistic."""
    ordered = np.sort(values)
    return float(ordered[(len(ordered) - 1) // 2])


class EstimatorBank:
    """s1 x s2 grid of independently seeded instances over one stream."""

    def __init__(
        self,
        config: SketchConfig,
        *,
        params: AccuracyParams | None = None,
        shape: BankShape | None = None,
        master_seed: int = 0,
        paper_constants: bool = False,
    ) -> None:
        if shape is None:
            if params is None:
                raise ValueError("provide either params or an explicit shape")
            shape = derive_shape(params, config.k, paper_constants=paper_constants)
        self.config = config
        self.params = params
        self.shape = shape
        self.master_seed = master_seed & ((1 << 64) - 1)
        self.mode = Mode.INDEPENDENCE

        cells = shape.cells
        k = config.k
        self._t1 = np.zeros(cells, dtype=np.int64)
        self._marg = np.zeros((cells, k), dtype=np.int64)
        self._m = 0
        self._coefs = derive_coefficients_batch(
            self.master_seed, shape.s2, shape.s1, k, config.spec
        )
        if cells * k * config.n <= _SIGN_TABLE_ENTRY_LIMIT:
            xs = np.arange(config.n, dtype=np.uint64)
            self._tables = batch_sign_eval(self._coefs, xs, config.spec)
        else:
            self._tables = None

    # -- ingestion ----------------------------------------------------------

    def ingest(self, a: tuple[int, ...]) -> None:
        """Apply one stream item to every instance."""
        self.ingest_many([a])

    def ingest_many(self, items: Iterable[tuple[int, ...]]) -> int:
        """Apply a batch of items; returns how many were ingested."""
        total = 0
        chunk: list[tuple[int, ...]] = []
        for a in items:
            chunk.append(a)
            if len(chunk) >= _CHUNK_ITEMS:
                self._ingest_chunk(chunk)
                total += len(chunk)
                chunk = []
        if chunk:
            self._ingest_chunk(chunk)
            total += len(chunk)
        return total

    def _signs_for(self, dim: int, symbols: np.ndarray) -> np.ndarray:
        if self._tables is not None:
            return self._tables[:, dim, symbols]
        return batch_sign_eval(self._coefs[:, dim, :], symbols, self.config.spec)

    def _ingest_chunk(self, chunk: list[tuple[int, ...]]) -> None:
        k, n = self.config.k, self.config.n
        arr = np.asarray(chunk, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != k:
            raise ValueError(f"expected {k}-tuples")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
            raise ValueError(f"symbol out of range [0, {n}) in item {tuple(bad)}")

        rows, counts = np.unique(arr, axis=0, return_counts=True)
        cells = self.shape.cells
        # Cap the (cells x unique-rows) int64 working set at ~32 MiB.
        slab = max(1, (1 << 22) // max(cells, 1))
        for lo in range(0, len(rows), slab):
            sl = slice(lo, lo + slab)
            prod = self._signs_for(0, rows[sl, 0].astype(np.uint64))
            for dim in range(1, k):
                prod = prod * self._signs_for(dim, rows[sl, dim].astype(np.uint64))
            self._t1 += prod.astype(np.int64) @ counts[sl]

        for dim in range(k):
            syms, scnt = np.unique(arr[:, dim], return_counts=True)
            cols = self._signs_for(dim, syms.astype(np.uint64))
            self._marg[:, dim] += cols.astype(np.int64) @ scnt
        self._m += len(chunk)

    # -- estimation ---------------------------------------------------------

    @property
    def item_count(self) -> int:
        return self._m

    def instance_values(self) -> np.ndarray:
        """Per-instance Y as float64, shape (s2, s1).

        Each value is the correctly rounded float of the exact rational
        (U/m^k)^2, bit-identical to ``SketchInstance.finalize`` on the
        same cell.
        """
        if self._m == 0:
            raise EmptyStreamError("cannot estimate from an empty stream")
        k, m = self.config.k, self._m
        if m**k < (1 << 62):
            u_values = (self._t1 * m ** (k - 1) - self._marg.prod(axis=1)).tolist()
        else:
            # Counters exceed the int64-safe product range; exact big ints.
            u_values = [
                t1 * m ** (k - 1) - math.prod(marg)
                for t1, marg in zip(self._t1.tolist(), self._marg.tolist())
            ]
        m2k = m ** (2 * k)
        y = np.fromiter(
            (0.0 if u == 0 else float(Fraction(u * u, m2k)) for u in u_values),
            dtype=np.float64,
            count=len(u_values),
        )
        return y.reshape(self.shape.s2, self.shape.s1)

    def estimate(self) -> Estimate:
        """Median over groups of the mean instance value within each group."""
        groups = self.instance_values().mean(axis=1)
        med = _median_lower(groups)
        return Estimate(l2_squared=med, l2=math.sqrt(med))

    def state_size(self) -> StateSize:
        return StateSize(
            counters=self.shape.cells * (self.config.k + 1),
            seeds=self.shape.cells * self.config.k * 4,
        )

    # -- inspection & merging ----------------------------------------------

    def instance_view(self, group: int, index: int) -> SketchInstance:
        """Materialize one cell as a scalar SketchInstance (copied counters)."""
        if not (0 <= group < self.shape.s2 and 0 <= index < self.shape.s1):
            raise IndexError("cell outside bank shape")
        hashes = derive_hashes(
            self.master_seed,
            self.config.k,
            self.config.spec,
            self.config.n,
            group=group,
            index=index,
        )
        inst = SketchInstance(self.config, hashes, Mode.INDEPENDENCE)
        flat = group * self.shape.s1 + index
        inst.t1 = int(self._t1[flat])
        inst.marginal_sums = [int(v) for v in self._marg[flat]]
        inst.m = self._m
        return inst

    def counters_equal(self, other: "EstimatorBank") -> bool:
        return (
            self._m == other._m
            and np.array_equal(self._t1, other._t1)
            and np.array_equal(self._marg, other._marg)
        )

    # -- snapshots -----------------------------------------------------------

    def snapshot_bytes(self) -> bytes:
        seed_signed = struct.unpack("<q", struct.pack("<Q", self.master_seed))[0]
        header = _HEADER.pack(
            _SNAPSHOT_VERSION,
            self.config.k,
            self.config.n,
            self.config.spec.width,
            self.shape.s1,
            self.shape.s2,
            seed_signed,
            0,
        )
        body = np.empty((self.shape.cells, self.config.k + 2), dtype="<i8")
        body[:, 0] = self._t1
        body[:, 1:-1] = self._marg
        body[:, -1] = self._m
        return _MAGIC + header + body.tobytes()

    def save(self, path) -> None:
        with open(path, "wb") as fp:
            fp.write(self.snapshot_bytes())

    @classmethod
    def from_snapshot_bytes(cls, data: bytes) -> "EstimatorBank":
        if data[: len(_MAGIC)] != _MAGIC:
            raise ValueError("not a bank snapshot (bad magic)")
        off = len(_MAGIC)
        version, k, n, width, s1, s2, seed_signed, mode = _HEADER.unpack_from(data, off)
        if version != _SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        if mode != 0:
            raise ValueError("only independence-mode snapshots are supported")
        off += _HEADER.size
        cells = s1 * s2
        body = np.frombuffer(data, dtype="<i8", offset=off)
        if body.size != cells * (k + 2):
            raise ValueError("snapshot body length does not match header")
        body = body.reshape(cells, k + 2)
        master_seed = struct.unpack("<Q", struct.pack("<q", seed_signed))[0]
        bank = cls(
            SketchConfig(k=k, n=n, spec=FieldSpec(width)),
            shape=BankShape(s1=s1, s2=s2),
            master_seed=master_seed,
        )
        ms = np.unique(body[:, -1])
        if len(ms) != 1:
            raise ValueError("snapshot cells disagree on the item count")
        bank._t1 = body[:, 0].astype(np.int64)
        bank._marg = body[:, 1:-1].astype(np.int64)
        bank._m = int(ms[0])
        return bank

    @classmethod
    def load(cls, path) -> "EstimatorBank":
        with open(path, "rb") as fp:
            return cls.from_snapshot_bytes(fp.read())


def merge_banks(a: EstimatorBank, b: EstimatorBank) -> EstimatorBank:
    """Cell-wise counter sum; equals ingesting the concatenated stream."""
    if a.config != b.config or a.shape != b.shape or a.master_seed != b.master_seed:
        raise ValueError("banks differ in configuration, shape or master seed")
    out = EstimatorBank(a.config, shape=a.shape, master_seed=a.master_seed,
                        params=a.params)
    out._t1 = a._t1 + b._t1
    out._marg = a._marg + b._marg
    out._m = a._m + b._m
    return out
