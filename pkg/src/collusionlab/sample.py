"""Seeded samplers for impartial culture (IC) and impartial scores culture (ISC).

Random streams
--------------
An :class:`RngStream` is a value ``(seed, stream_id)``.  It maps to numpy's
PCG64 generator seeded through ``SeedSequence(seed, spawn_key=(stream_id,))``,
whose output is fixed across platforms and numpy releases.  Child streams
mix the parent id and child index with SplitMix64, so a block of Monte Carlo
trials can be replayed from its index alone.  ``tests/test_sample.py`` pins
reference outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Rule, RuleKind, ScoringProfile, Unsupported, PreconditionViolated
from .count import bounded_composition_table

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v <= MASK64:
                raise PreconditionViolated(f"{name} must be an unsigned 64-bit integer, got {v}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def spawn_stream(parent: RngStream, child_index: int) -> RngStream:
    child = splitmix64(splitmix64(parent.stream_id) ^ (child_index & MASK64))
    return RngStream(parent.seed, child)


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """A fresh generator for a stream value, or the generator itself."""
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def randbelow(gen: np.random.Generator, bound: int) -> int:
    """Uniform integer in ``[0, bound)`` for arbitrarily large ``bound``, by rejection."""
    if bound < 1:
        raise PreconditionViolated("bound must be positive")
    if bound <= 1 << 62:
        return int(gen.integers(0, bound))
    bits = (bound - 1).bit_length()
    words = (bits + 63) // 64
    excess = words * 64 - bits
    while True:
        value = 0
        for w in gen.bit_generator.random_raw(words):
            value = (value << 64) | int(w)
        value >>= excess
        if value < bound:
            return value


def sample_ic(n: int, m: int, rng: RngLike) -> tuple:
    """``n`` independent uniform linear orders over ``m`` candidates."""
    if n < 0 or m < 1:
        raise PreconditionViolated("need n >= 0 and m >= 1")
    gen = as_generator(rng)
    rows = gen.permuted(np.tile(np.arange(m), (n, 1)), axis=1)
    return tuple(tuple(int(c) for c in row) for row in rows)


def _uniform_composition(gen, total: int, parts: int) -> list:
    # Stars and bars: a uniform (parts-1)-subset of total+parts-1 slots.
    bars = np.sort(gen.choice(total + parts - 1, size=parts - 1, replace=False))
    edges = np.concatenate(([-1], bars, [total + parts - 1]))
    return [int(v) for v in np.diff(edges) - 1]


def _bounded_composition(gen, total: int, parts: int, cap: int) -> list:
    table = bounded_composition_table(parts, cap, total)
    out = []
    remaining = total
    for j in range(parts, 0, -1):
        u = randbelow(gen, table[j][remaining])
        for v in range(min(cap, remaining), -1, -1):
            w = table[j - 1][remaining - v]
            if u < w:
                break
            u -= w
        out.append(v)
        remaining -= v
    return out


def sample_isc(rule: Rule, n: int, rng: RngLike) -> ScoringProfile:
    """A uniformly random element of ``S^n([m])`` for an approval-style rule."""
    if rule.kind is RuleKind.BORDA:
        raise Unsupported("no uniform sampler over Borda scoring profiles")
    if n < 0:
        raise PreconditionViolated("need n >= 0")
    gen = as_generator(rng)
    m = rule.m
    if m == 1:
        return ScoringProfile((n * (-1 if rule.kind is RuleKind.VETO else 1),), n, rule)
    if rule.kind is RuleKind.PLURALITY:
        return ScoringProfile(tuple(_uniform_composition(gen, n, m)), n, rule)
    if rule.kind is RuleKind.VETO:
        return ScoringProfile(tuple(-v for v in _uniform_composition(gen, n, m)), n, rule)
    return ScoringProfile(tuple(_bounded_composition(gen, n * rule.k, m, n)), n, rule)
