"""Semantic configurations over three blocks.

A configuration is a 9-tuple of 0/1 ints laid out as

    [c(o1,o2), c(o1,o3), c(o2,o3),
     a(o1,o2), a(o2,o1), a(o1,o3), a(o3,o1), a(o2,o3), a(o3,o2)]

where ``c`` is the symmetric *close* predicate and ``a`` the asymmetric
*above* predicate. Objects are numbered 0, 1, 2 (red, green, blue).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Tuple, Union

N_OBJECTS = 3
N_SLOTS = 9
COLORS = ("red", "green", "blue")

Config = Tuple[int, ...]

CLOSE_PAIRS = ((0, 1), (0, 2), (1, 2))
ABOVE_PAIRS = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1))

ZERO: Config = (0,) * N_SLOTS


class InvalidPairError(ValueError):
    pass


@dataclass(frozen=True)
class PredicateSlot:
    index: int
    kind: str  # "close" | "above"
    pair: Tuple[int, int]

    def __str__(self):
        a, b = self.pair
        return f"{self.kind[0]}(o{a + 1},o{b + 1})"


SLOTS = tuple(
    [PredicateSlot(i, "close", p) for i, p in enumerate(CLOSE_PAIRS)]
    + [PredicateSlot(3 + i, "above", p) for i, p in enumerate(ABOVE_PAIRS)]
)


def slot_of(kind: str, pair: Tuple[int, int]) -> PredicateSlot:
    i, j = pair
    if i == j:
        raise InvalidPairError(f"pair must hold two distinct objects, got {pair}")
    if not (0 <= i < N_OBJECTS and 0 <= j < N_OBJECTS):
        raise InvalidPairError(f"unknown object id in {pair}")
    if kind == "close":
        return SLOTS[CLOSE_PAIRS.index((min(i, j), max(i, j)))]
    if kind == "above":
        return SLOTS[3 + ABOVE_PAIRS.index((i, j))]
    raise ValueError(f"unknown predicate kind {kind!r}")


def close_index(i: int, j: int) -> int:
    return slot_of("close", (i, j)).index


def above_index(i: int, j: int) -> int:
    return slot_of("above", (i, j)).index


# ---------------------------------------------------------------------------
# text form

def to_str(c: Config) -> str:
    return "".join("1" if b else "0" for b in c)


def from_str(s: str) -> Config:
    s = s.strip()
    if len(s) != N_SLOTS or set(s) - {"0", "1"}:
        raise ValueError(f"expected 9 characters of 0/1, got {s!r}")
    return tuple(int(ch) for ch in s)


def from_bits(bits: Iterable) -> Config:
    c = tuple(int(bool(b)) for b in bits)
    if len(c) != N_SLOTS:
        raise ValueError(f"expected {N_SLOTS} bits, got {len(c)}")
    return c


# ---------------------------------------------------------------------------
# structure classes

THIRD_PATTERNS = ("isolated", "near-bottom", "near-both")


@dataclass(frozen=True)
class Flat:
    pattern: Tuple[int, int, int]

    def label(self):
        return "flat-" + "".join(map(str, self.pattern))


@dataclass(frozen=True)
class Stack2:
    top: int
    bottom: int
    third: str = "isolated"

    def __post_init__(self):
        if self.top == self.bottom:
            raise InvalidPairError("stack needs two distinct blocks")
        if self.third not in THIRD_PATTERNS:
            raise ValueError(f"unknown third-block pattern {self.third!r}")

    @property
    def other(self):
        return 3 - self.top - self.bottom

    def label(self):
        return f"stack2-{COLORS[self.top]}-on-{COLORS[self.bottom]}-{self.third}"


@dataclass(frozen=True)
class Stack3:
    top: int
    mid: int
    bottom: int

    def __post_init__(self):
        if len({self.top, self.mid, self.bottom}) != 3:
            raise InvalidPairError("3-stack needs three distinct blocks")

    def label(self):
        return "stack3-" + "-".join(COLORS[o] for o in (self.top, self.mid, self.bottom))


@dataclass(frozen=True)
class Pyramid:
    top: int

    def label(self):
        return f"pyramid-{COLORS[self.top]}"


Structure = Union[Flat, Stack2, Stack3, Pyramid]


def realize(structure: Structure) -> Config:
    bits = [0] * N_SLOTS
    if isinstance(structure, Flat):
        for k, b in enumerate(structure.pattern):
            bits[k] = int(b)
    elif isinstance(structure, Stack2):
        t, b, k = structure.top, structure.bottom, structure.other
        bits[above_index(t, b)] = 1
        bits[close_index(t, b)] = 1
        if structure.third in ("near-bottom", "near-both"):
            bits[close_index(k, b)] = 1
        if structure.third == "near-both":
            bits[close_index(k, t)] = 1
    elif isinstance(structure, Stack3):
        t, m, b = structure.top, structure.mid, structure.bottom
        bits[above_index(t, m)] = bits[above_index(m, b)] = 1
        bits[close_index(t, m)] = bits[close_index(m, b)] = 1
    elif isinstance(structure, Pyramid):
        for i in range(3):
            bits[i] = 1
        for x in range(N_OBJECTS):
            if x != structure.top:
                bits[above_index(structure.top, x)] = 1
    else:
        raise TypeError(f"not a structure: {structure!r}")
    return tuple(bits)


def all_structures() -> Iterator[Structure]:
    for pattern in itertools.product((0, 1), repeat=3):
        yield Flat(pattern)
    for t, b in itertools.permutations(range(N_OBJECTS), 2):
        for third in THIRD_PATTERNS:
            yield Stack2(t, b, third)
    for t, m, b in itertools.permutations(range(N_OBJECTS)):
        yield Stack3(t, m, b)
    for top in range(N_OBJECTS):
        yield Pyramid(top)


@lru_cache(maxsize=None)
def _valid_table():
    table = {}
    for s in all_structures():
        c = realize(s)
        assert c not in table, f"duplicate realization for {s}"
        table[c] = s
    return {c: table[c] for c in sorted(table)}


def enumerate_valid() -> Tuple[Config, ...]:
    """The physically valid configurations in lexicographic bit order."""
    return tuple(_valid_table())


def structure_of(c: Config):
    return _valid_table().get(tuple(c))


def is_valid(c: Config) -> bool:
    return tuple(c) in _valid_table()


# ---------------------------------------------------------------------------
# diffs

UP = (0, 1)
DOWN = (1, 0)


def diff(c_i: Config, c_f: Config):
    """List of (slot, (source, target)) for every bit that changes."""
    return [(SLOTS[k], (a, b)) for k, (a, b) in enumerate(zip(c_i, c_f)) if a != b]
