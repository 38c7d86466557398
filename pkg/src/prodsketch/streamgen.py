"""Seeded synthetic tuple streams with a tunable dependence knob.

Each item is drawn independently: with probability ``lam`` it is the
diagonal tuple (x, ..., x) for a uniform x, otherwise its k symbols are
independent uniforms.  ``lam = 0`` gives (distributionally) independent
coordinates, ``lam = 1`` maximally dependent ones.

Generation is stateless per item: item i draws from a SplitMix64 stream
seeded by word i of the master stream (algorithm id ``splitmix64ctr/1``,
recorded in generated file headers).  That makes any index range
reproducible in isolation, so parallel generation can pre-split the index
space without coordination.  The diagonal decision compares a raw 64-bit
word against round(lam * 2^64); uniform symbols use rejection sampling,
so they are exactly uniform on [0, n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .rng import word_at

GENERATOR_ID = "splitmix64ctr/1"


@dataclass(frozen=True)
class GenSpec:
    n: int
    k: int
    m: int
    lam: float
    rng_seed: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1 or self.m < 1:
            raise ValueError("n, k and m must be >= 1")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lambda must lie in [0, 1]")

    def header(self) -> dict[str, str]:
        return {
            "generator": GENERATOR_ID,
            "n": str(self.n),
            "k": str(self.k),
            "m": str(self.m),
            "lambda": repr(self.lam),
            "rng_seed": str(self.rng_seed),
        }


def _uniform(item_seed: int, draw: int, n: int) -> tuple[int, int]:
    """Rejection-sampled uniform on [0, n); returns (symbol, next draw index)."""
    bound = (1 << 64) - ((1 << 64) % n)
    while True:
        w = word_at(item_seed, draw)
        draw += 1
        if w < bound:
            return w % n, draw


def generate_range(spec: GenSpec, start: int, stop: int) -> Iterator[tuple[int, ...]]:
    """Items [start, stop) of the stream, independent of any other range."""
    if not (0 <= start <= stop <= spec.m):
        raise ValueError("index range outside the stream")
    threshold = round(spec.lam * (1 << 64))
    for i in range(start, stop):
        item_seed = word_at(spec.rng_seed, i)
        if word_at(item_seed, 0) < threshold:
            x, _ = _uniform(item_seed, 1, spec.n)
            yield (x,) * spec.k
        else:
            draw = 1
            item = []
            for _ in range(spec.k):
                x, draw = _uniform(item_seed, draw, spec.n)
                item.append(x)
            yield tuple(item)


def generate(spec: GenSpec) -> Iterator[tuple[int, ...]]:
    """The full stream of ``spec.m`` items."""
    return generate_range(spec, 0, spec.m)
