"""Exactly 4-wise independent sign hashes from cubic polynomials over GF(2^w).

A hash is a degree-at-most-3 polynomial ``p(x) = c3 x^3 + c2 x^2 + c1 x + c0``
over GF(2^w), evaluated at the input symbol injected as a field element, with
output sign ``+1`` when the low bit of ``p(x)`` is 0 and ``-1`` otherwise.
For any four distinct evaluation points the coefficient-to-values map is a
bijection (polynomial interpolation), so the four output words are jointly
uniform and each of the 16 sign patterns is hit by exactly a 1/16 fraction
of seeds.  Independence is exact, not approximate, which is what lets the
oracle verify moment bounds with zero tolerance by enumerating seeds.

Seed derivation is counter-mode SplitMix64.  Coefficient ``c`` of dimension
``dim`` of the hash tuple for bank cell ``(group, index)`` uses the counter

    ((group << 32 | index) << 10) | (dim << 2) | c

so counters never collide for ``group < 2^22``, ``index < 2^32``,
``dim < 256`` and seeds of an instance do not depend on the bank shape
(growing a bank never re-seeds existing cells).  Module-level hash tuples
are cell ``(0, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import FieldElement, FieldSpec, field_mul, field_mul_vec
from .rng import word_at, words_at

MAX_DIMS = 256
MAX_GROUP = 1 << 22
MAX_INDEX = 1 << 32


@dataclass(frozen=True)
class SignHashSeed:
    """Coefficients (c0, c1, c2, c3) of one cubic, c0 the constant term."""

    c0: FieldElement
    c1: FieldElement
    c2: FieldElement
    c3: FieldElement

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.c0, self.c1, self.c2, self.c3)

    def as_int(self, width: int) -> int:
        """Pack into one integer, c0 in the lowest w bits."""
        return (
            self.c0
            | (self.c1 << width)
            | (self.c2 << (2 * width))
            | (self.c3 << (3 * width))
        )

    @classmethod
    def from_int(cls, packed: int, width: int) -> "SignHashSeed":
        mask = (1 << width) - 1
        return cls(
            packed & mask,
            (packed >> width) & mask,
            (packed >> (2 * width)) & mask,
            (packed >> (3 * width)) & mask,
        )


@dataclass(frozen=True)
class SignHash:
    """One member of the family: a seeded cubic over ``spec`` on domain [0, n)."""

    spec: FieldSpec
    seed: SignHashSeed
    n: int

    def __post_init__(self) -> None:
        if not (1 <= self.n <= self.spec.order):
            raise ValueError(
                f"domain size {self.n} exceeds field order 2^{self.spec.width}"
            )
        for c in self.seed.as_tuple():
            if not (0 <= c < self.spec.order):
                raise ValueError("seed coefficient outside the field")

    def __call__(self, x: int) -> int:
        return sign_hash_eval(self, x)


def sign_hash_eval(h: SignHash, x: int) -> int:
    """Sign of ``h`` at symbol ``x``; Horner evaluation, then the low bit."""
    if not (0 <= x < h.n):
        raise ValueError(f"symbol {x} outside hash domain [0, {h.n})")
    c0, c1, c2, c3 = h.seed.as_tuple()
    spec = h.spec
    p = c3
    p = field_mul(p, x, spec) ^ c2
    p = field_mul(p, x, spec) ^ c1
    p = field_mul(p, x, spec) ^ c0
    return 1 - 2 * (p & 1)


def coefficient_counter(group: int, index: int, dim: int, coef: int) -> int:
    """Derivation counter for one coefficient; injective within the caps."""
    if not (0 <= group < MAX_GROUP and 0 <= index < MAX_INDEX):
        raise ValueError("bank cell outside derivable range")
    if not (0 <= dim < MAX_DIMS and 0 <= coef < 4):
        raise ValueError("dimension or coefficient index out of range")
    return (((group << 32) | index) << 10) | (dim << 2) | coef


def derive_hashes(
    master_seed: int,
    k: int,
    spec: FieldSpec,
    n: int | None = None,
    *,
    group: int = 0,
    index: int = 0,
) -> tuple[SignHash, ...]:
    """The k mutually independent hashes for one bank cell.

    Each coefficient is the low w bits of its counter-mode word, hence an
    independent uniform field element; the derivation is reproducible from
    (master_seed, group, index) alone.
    """
    if k < 1 or k > MAX_DIMS:
        raise ValueError(f"k must be in [1, {MAX_DIMS}]")
    if n is None:
        n = spec.order
    mask = spec.mask
    out = []
    for dim in range(k):
        coefs = tuple(
            word_at(master_seed, coefficient_counter(group, index, dim, c)) & mask
            for c in range(4)
        )
        out.append(SignHash(spec, SignHashSeed(*coefs), n))
    return tuple(out)


def make_independent_hashes(
    k: int, master_seed: int, spec: FieldSpec, n: int | None = None
) -> tuple[SignHash, ...]:
    """Module-level hash tuple: bank cell (0, 0) of ``master_seed``."""
    return derive_hashes(master_seed, k, spec, n)


# ---------------------------------------------------------------------------
# Bulk paths (numpy), bit-identical to the scalar ones above.
# ---------------------------------------------------------------------------

def derive_coefficients_batch(
    master_seed: int, groups: int, indexes: int, k: int, spec: FieldSpec
) -> np.ndarray:
    """Coefficient array of shape (groups*indexes, k, 4), row-major cells."""
    g = np.arange(groups, dtype=np.uint64)[:, None, None, None]
    j = np.arange(indexes, dtype=np.uint64)[None, :, None, None]
    d = np.arange(k, dtype=np.uint64)[None, None, :, None]
    c = np.arange(4, dtype=np.uint64)[None, None, None, :]
    counters = (((g << np.uint64(32)) | j) << np.uint64(10)) | (d << np.uint64(2)) | c
    words = words_at(master_seed, counters.reshape(-1))
    coefs = words & np.uint64(spec.mask)
    return coefs.reshape(groups * indexes, k, 4)


def batch_sign_eval(coefs: np.ndarray, xs: np.ndarray, spec: FieldSpec) -> np.ndarray:
    """Signs of many hashes at many points.

    ``coefs`` has shape (..., 4) with the last axis (c0, c1, c2, c3);
    ``xs`` is a 1-D array of symbols.  Returns int8 signs of shape
    (..., len(xs)).  Horner's rule with the vectorized field multiply.
    """
    coefs = np.asarray(coefs, dtype=np.uint64)
    xs = np.asarray(xs, dtype=np.uint64)
    lead = coefs[..., 3:4]  # broadcast (..., 1) against (P,)
    p = field_mul_vec(lead, xs, spec) ^ coefs[..., 2:3]
    p = field_mul_vec(p, xs, spec) ^ coefs[..., 1:2]
    p = field_mul_vec(p, xs, spec) ^ coefs[..., 0:1]
    return (1 - 2 * (p & np.uint64(1)).astype(np.int8)).astype(np.int8)
