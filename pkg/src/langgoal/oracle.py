"""Brute-force ground truth for compatible goal sets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, List, Tuple

from . import instructions as ins
from . import semantics as sem


class InapplicableShiftError(ValueError):
    pass


class MissingOracleEntry(KeyError):
    pass


@dataclass(frozen=True)
class OracleEntry:
    c_i: sem.Config
    sentence: ins.Sentence
    c_f_set: FrozenSet[sem.Config]

    @property
    def key(self):
        return (self.c_i, self.sentence.text)


def compatible_set(c_i, meaning: ins.ShiftMeaning) -> FrozenSet[sem.Config]:
    if not meaning.applicable(c_i):
        raise InapplicableShiftError(f"{meaning} does not apply to {sem.to_str(c_i)}")
    k = meaning.slot.index
    return frozenset(c for c in sem.enumerate_valid() if c[k] == meaning.target)


def satisfied(c_i, c_f, expr) -> bool:
    if isinstance(expr, ins.Leaf):
        return any(m.holds(c_i, c_f) for m in expr.meanings)
    if isinstance(expr, ins.Not):
        return not satisfied(c_i, c_f, expr.child)
    if isinstance(expr, ins.And):
        return satisfied(c_i, c_f, expr.left) and satisfied(c_i, c_f, expr.right)
    if isinstance(expr, ins.Or):
        return satisfied(c_i, c_f, expr.left) or satisfied(c_i, c_f, expr.right)
    raise TypeError(f"not an expression: {expr!r}")


def compatible_set_expr(c_i, expr) -> FrozenSet[sem.Config]:
    """Goal-set algebra: and = intersection, or = union, not = complement."""
    if isinstance(expr, ins.Leaf):
        out = frozenset()
        for m in expr.meanings:
            if m.applicable(c_i):
                out |= compatible_set(c_i, m)
        return out
    if isinstance(expr, ins.Not):
        return frozenset(sem.enumerate_valid()) - compatible_set_expr(c_i, expr.child)
    if isinstance(expr, ins.And):
        return compatible_set_expr(c_i, expr.left) & compatible_set_expr(c_i, expr.right)
    if isinstance(expr, ins.Or):
        return compatible_set_expr(c_i, expr.left) | compatible_set_expr(c_i, expr.right)
    raise TypeError(f"not an expression: {expr!r}")


def all_leaves_applicable(c_i, expr) -> bool:
    return all(any(m.applicable(c_i) for m in leaf.meanings) for leaf in ins.leaves(expr))


@lru_cache(maxsize=None)
def _oracle():
    entries = []
    for c_i in sem.enumerate_valid():
        for s in ins.build_instruction_set():
            if s.meaning.applicable(c_i):
                entries.append(OracleEntry(c_i, s, compatible_set(c_i, s.meaning)))
    return tuple(entries)


def build_oracle() -> List[OracleEntry]:
    return list(_oracle())


class Oracle:
    """Oracle entries indexed by (c_i, sentence text)."""

    def __init__(self, entries=None):
        self.entries = list(entries if entries is not None else _oracle())
        self._index: Dict[Tuple[sem.Config, str], OracleEntry] = {}
        for e in self.entries:
            if e.key in self._index:
                raise ValueError(f"duplicate oracle key {e.key}")
            self._index[e.key] = e

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return tuple(key) in self._index

    def lookup(self, c_i, text) -> OracleEntry:
        try:
            return self._index[(tuple(c_i), text)]
        except KeyError:
            raise MissingOracleEntry(f"no oracle entry for ({sem.to_str(c_i)}, {text!r})") from None

    def mean_set_size(self):
        return sum(len(e.c_f_set) for e in self.entries) / len(self.entries)

    def to_json(self):
        return [
            {"ci": sem.to_str(e.c_i), "s": e.sentence.text,
             "cf": sorted(sem.to_str(c) for c in e.c_f_set)}
            for e in self.entries
        ]

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=0)
