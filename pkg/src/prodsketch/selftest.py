"""Exhaustive verification battery behind the CLI ``selftest`` subcommand.

Each check compares an implementation quantity against an independently
computed expectation, in exact arithmetic wherever the claim is exact:

  * field axioms of GF(2^w) (exhaustive for small widths),
  * the 1/16 seed census of the sign-hash family,
  * enumerated E[Y] against the exact squared L2 distance,
  * enumerated Var[Y] against the (3^k - 1) E^2 bound,
  * pinned variance/expectation^2 ratios of the uniform vector,
  * merge/replay counter equality,
  * exact-zero streams, and
  * table-vs-incremental agreement of Y.

``quick`` skips the k = 3 enumerations.  ``field_fault`` swaps in a
reducible polynomial for the w = 4 axiom check; it exists so the negative
control can demonstrate the battery actually fails on a broken field.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .field import FieldSpec, field_mul, field_pow, is_irreducible
from .hashing import SignHash, SignHashSeed
from .oracle import (
    FrequencyTable,
    all_seed_signs,
    exact_l2sq,
    exact_y_from_table,
    exhaustive_moments,
    seed_uniformity_census,
)
from .sketch import SketchConfig, SketchInstance, merge_sketches
from .streamgen import GenSpec, generate

# Exact Var/E^2 of the all-ones vector over GF(2^2) hashes at n=4, frozen
# from the first enumeration run (equals 2.5^k - 1 from the T-moment
# factorization E[T^2]=4, E[T^4]=40).
PINNED_TIGHTNESS = {1: Fraction(3, 2), 2: Fraction(21, 4), 3: Fraction(117, 8)}


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    expected: str
    actual: str


def battery_streams_k2() -> list[list[tuple[int, ...]]]:
    """Ten fixed short streams on [4]^2 (m <= 8) for the w=2 enumerations."""
    specs = [
        GenSpec(n=4, k=2, m=3 + (i % 6), lam=(i % 11) / 10, rng_seed=7000 + i)
        for i in range(10)
    ]
    return [list(generate(s)) for s in specs]


def battery_streams_k3() -> list[list[tuple[int, ...]]]:
    """Six fixed short streams on [2]^3 (m <= 8) for the w=1 enumerations."""
    specs = [
        GenSpec(n=2, k=3, m=3 + (i % 6), lam=(i % 11) / 10, rng_seed=7100 + i)
        for i in range(6)
    ]
    return [list(generate(s)) for s in specs]


def uniform_vector(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {p: 1 for p in itertools.product(range(n), repeat=k)}


def check_field_axioms(spec: FieldSpec) -> tuple[bool, str]:
    """Identity, commutativity, associativity, distributivity, inverses.

    Exhaustive for order <= 16; at larger orders inverses stay exhaustive
    (order <= 256) and the ternary axioms run on a fixed random sample.
    """
    order = spec.order
    elements = range(order)
    for a in elements:
        if field_mul(0, a, spec) != 0 or field_mul(1, a, spec) != a:
            return False, f"identity/zero violated at a={a}"
    if order <= 16:
        triples = itertools.product(elements, repeat=3)
    else:
        rng = random.Random(0xF1E1D)
        triples = (
            tuple(rng.randrange(order) for _ in range(3)) for _ in range(300)
        )
    for a, b, c in triples:
        ab = field_mul(a, b, spec)
        if ab != field_mul(b, a, spec):
            return False, f"commutativity violated at ({a},{b})"
        if field_mul(ab, c, spec) != field_mul(a, field_mul(b, c, spec), spec):
            return False, f"associativity violated at ({a},{b},{c})"
        if field_mul(a, b ^ c, spec) != ab ^ field_mul(a, c, spec):
            return False, f"distributivity violated at ({a},{b},{c})"
    if order <= 256:
        for a in range(1, order):
            inv = field_pow(a, order - 2, spec)
            if field_mul(a, inv, spec) != 1:
                return False, f"no inverse for a={a}"
    return True, "all axioms hold"


def _result(name: str, ok: bool, expected, actual) -> CheckResult:
    return CheckResult(name, ok, str(expected), str(actual))


def run_selftest(quick: bool = False, field_fault: bool = False) -> list[CheckResult]:
    results: list[CheckResult] = []
    w1, w2 = FieldSpec(1), FieldSpec(2)

    # Field axioms; the fault hook corrupts w=4 with (x^2+x+1)^2.
    for width in (1, 2, 4, 8):
        if width == 4 and field_fault:
            spec = FieldSpec(4, reduction_polynomial=0b10101)
        else:
            spec = FieldSpec(width)
        ok, detail = check_field_axioms(spec)
        results.append(_result(f"field-axioms-w{width}", ok, "all axioms hold", detail))

    irr = {w: is_irreducible(FieldSpec(w).reduction_polynomial) for w in (1, 2, 4, 8, 16, 32, 64)}
    results.append(
        _result("reduction-polynomials-irreducible", all(irr.values()),
                "irreducible for every width", irr)
    )

    # Hash family census: every sign pattern on 4 distinct points gets
    # exactly 1/16 of the 256 seeds.
    census = seed_uniformity_census(w2, (0, 1, 2, 3))
    ok = len(census) == 16 and all(c == 16 for c in census.values())
    results.append(
        _result("seed-census-w2", ok, "16 patterns x 16 seeds",
                f"{len(census)} patterns, counts {sorted(set(census.values()))}")
    )

    # Enumerated expectation equals the exact distance, and the enumerated
    # variance clears the (3^k - 1) E^2 bound, with zero tolerance.
    def moment_checks(streams, n, k, spec, tag):
        exp_ok, var_ok = True, True
        worst = Fraction(0)
        for stream in streams:
            table = FrequencyTable.from_stream(stream, k=k, n=n)
            moments = exhaustive_moments(table, spec=spec)
            if moments.expectation != exact_l2sq(table):
                exp_ok = False
            bound = (3**k - 1) * moments.expectation**2
            if moments.variance > bound:
                var_ok = False
            if moments.ratio is not None and moments.ratio > worst:
                worst = moments.ratio
        results.append(
            _result(f"expectation-matches-l2sq-{tag}", exp_ok,
                    "E[Y] == exact l2^2 on every stream", exp_ok)
        )
        results.append(
            _result(f"variance-bound-{tag}", var_ok,
                    f"Var <= {3 ** k - 1} E^2", f"worst ratio {worst}")
        )

    moment_checks(battery_streams_k2(), n=4, k=2, spec=w2, tag="k2-w2")
    if not quick:
        moment_checks(battery_streams_k3(), n=2, k=3, spec=w1, tag="k3-w1")

    # Tightness of the 3^k law on the all-ones vector.
    for k in (1, 2) if quick else (1, 2, 3):
        moments = exhaustive_moments(uniform_vector(4, k), spec=w2, k=k, n=4)
        pinned = PINNED_TIGHTNESS[k]
        ok = moments.ratio == pinned and moments.ratio >= Fraction(3**k, 2)
        results.append(
            _result(f"tightness-k{k}", ok,
                    f"ratio == {pinned} and >= {Fraction(3 ** k, 2)}", moments.ratio)
        )

    # Merge/replay: sketching two halves and merging equals one pass.
    splits = 10 if quick else 100
    config = SketchConfig(k=2, n=4, spec=w2)
    merge_ok = True
    for i in range(splits):
        stream = list(generate(GenSpec(n=4, k=2, m=20 + i % 60, lam=0.4, rng_seed=8000 + i)))
        cut = (7 * i) % (len(stream) + 1)
        whole = SketchInstance.from_master_seed(config, master_seed=i)
        left = SketchInstance.from_master_seed(config, master_seed=i)
        right = SketchInstance.from_master_seed(config, master_seed=i)
        for a in stream:
            whole.update_item(a)
        for a in stream[:cut]:
            left.update_item(a)
        for a in stream[cut:]:
            right.update_item(a)
        if merge_sketches(left, right).counters() != whole.counters():
            merge_ok = False
    results.append(
        _result("merge-replay", merge_ok, f"{splits} split replays bit-exact", merge_ok)
    )

    # Exact zeros: single item, constant stream, full enumeration.
    zero_ok = True
    spec2 = w2
    for s in range(256):
        h1 = SignHash(spec2, SignHashSeed.from_int(s, 2), 4)
        h2 = SignHash(spec2, SignHashSeed.from_int(255 - s, 2), 4)
        inst = SketchInstance(SketchConfig(k=2, n=4, spec=spec2), (h1, h2))
        inst.update_item((1, 2))
        if inst.finalize_exact() != 0:
            zero_ok = False
        for _ in range(4):
            inst.update_item((1, 2))
        if inst.finalize_exact() != 0:
            zero_ok = False
    results.append(
        _result("zero-single-and-constant", zero_ok,
                "Y == 0 for all 256 seed pairings", zero_ok)
    )

    enum_ok = True
    for n, k, spec in ((2, 2, w2), (3, 2, w2), (4, 2, w2), (2, 3, w1)):
        t = all_seed_signs(spec, n).astype(np.int64)
        row = t.sum(axis=1)
        m = n**k
        if k == 2:
            u = np.multiply.outer(row, row) * m - np.multiply.outer(n * row, n * row)
        else:
            u = (
                np.einsum("a,b,c->abc", row, row, row) * m**2
                - np.einsum("a,b,c->abc", n**2 * row, n**2 * row, n**2 * row)
            )
        if np.any(u != 0):
            enum_ok = False
    results.append(
        _result("zero-full-enumeration", enum_ok,
                "U == 0 over every seed tuple", enum_ok)
    )

    # Incremental sketch vs table recomputation, exact equality.
    agree_ok = True
    config = SketchConfig(k=2, n=4, spec=w2)
    for i in range(10 if quick else 25):
        stream = list(generate(GenSpec(n=4, k=2, m=30, lam=0.3, rng_seed=8200 + i)))
        table = FrequencyTable.from_stream(stream, k=2, n=4)
        inst = SketchInstance.from_master_seed(config, master_seed=900 + i)
        for a in stream:
            inst.update_item(a)
        if inst.finalize_exact() != exact_y_from_table(table, inst.hashes):
            agree_ok = False
    results.append(
        _result("sketch-table-agreement", agree_ok, "exact equality", agree_ok)
    )

    return results


def all_passed(results: list[CheckResult]) -> bool:
    return all(r.ok for r in results)
