"""Instruction grammar, vocabulary, and logical expressions over instructions.

Each instruction shifts exactly one predicate slot, either 0->1 or 1->0.
Templates use ``A`` and ``B`` as placeholders for two distinct colors.

The two "on_the_same_plane" templates of the above 1->0 block produce the
same surface text for the ordered pairs (A, B) and (B, A). Those six texts
therefore carry two meanings each, one per stacking order. Any valid
configuration has at most one of the two above bits set, so the meaning is
always resolved by the configuration the instruction is applied to.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

from . import semantics as sem

CLOSE_UP_TEMPLATES = (
    "put A close_to B",
    "bring B and A together",
    "put B close_to A",
    "bring A and B together",
    "get B and A close_from each_other",
    "get A close_to B",
    "get A and B close_from each_other",
    "get B close_to A",
)
CLOSE_DOWN_TEMPLATES = (
    "put A far_from B",
    "get A far_from B",
    "put B far_from A",
    "get B far_from A",
    "get A and B far_from each_other",
    "bring A and B apart",
    "get B and A far_from each_other",
    "bring B and A apart",
)
ABOVE_UP_TEMPLATES = (
    "put A above B",
    "put A on_top_of B",
    "put B under A",
    "put B below A",
)
ABOVE_DOWN_TEMPLATES = (
    "remove A from_above B",
    "remove A from B",
    "remove B from_below A",
    "put B and A on_the_same_plane",
    "put A and B on_the_same_plane",
)

BLOCKS = (
    ("close", sem.UP, CLOSE_UP_TEMPLATES),
    ("close", sem.DOWN, CLOSE_DOWN_TEMPLATES),
    ("above", sem.UP, ABOVE_UP_TEMPLATES),
    ("above", sem.DOWN, ABOVE_DOWN_TEMPLATES),
)


class UnknownTokenError(ValueError):
    def __init__(self, word):
        super().__init__(f"unknown token {word!r}")
        self.word = word


class NotAnInstructionError(ValueError):
    pass


class AmbiguousInstructionError(NotAnInstructionError):
    pass


class ExpressionSyntaxError(ValueError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


@dataclass(frozen=True)
class ShiftMeaning:
    slot: sem.PredicateSlot
    direction: Tuple[int, int]  # (source, target)

    @property
    def source(self):
        return self.direction[0]

    @property
    def target(self):
        return self.direction[1]

    def applicable(self, c_i) -> bool:
        return c_i[self.slot.index] == self.source

    def holds(self, c_i, c_f) -> bool:
        k = self.slot.index
        return c_i[k] == self.source and c_f[k] == self.target

    def __str__(self):
        return f"{self.slot} {self.source}->{self.target}"


@dataclass(frozen=True)
class Sentence:
    text: str
    meaning: ShiftMeaning
    block: int  # index into BLOCKS

    @property
    def tokens(self):
        return tokenize(self.text)


def _expand(template, a, b):
    words = []
    for w in template.split():
        words.append(sem.COLORS[a] if w == "A" else sem.COLORS[b] if w == "B" else w)
    return " ".join(words)


@lru_cache(maxsize=None)
def _build():
    out = []
    seen = set()
    for block, (kind, direction, templates) in enumerate(BLOCKS):
        if kind == "close":
            pairs = sem.CLOSE_PAIRS
        else:
            pairs = sem.ABOVE_PAIRS
        for a, b in pairs:
            meaning = ShiftMeaning(sem.slot_of(kind, (a, b)), direction)
            for t in templates:
                s = Sentence(_expand(t, a, b), meaning, block)
                assert (s.text, meaning) not in seen
                seen.add((s.text, meaning))
                out.append(s)
    return tuple(out)


def build_instruction_set() -> List[Sentence]:
    return list(_build())


@lru_cache(maxsize=None)
def _by_text() -> Dict[str, Tuple[Sentence, ...]]:
    table: Dict[str, list] = {}
    for s in _build():
        table.setdefault(s.text, []).append(s)
    return {k: tuple(v) for k, v in table.items()}


@lru_cache(maxsize=None)
def _by_meaning():
    table = {}
    for s in _build():
        table.setdefault(s.meaning, []).append(s)
    return {k: tuple(v) for k, v in table.items()}


def unique_texts() -> List[str]:
    return list(_by_text())


def sentences_for(meaning: ShiftMeaning) -> Tuple[Sentence, ...]:
    return _by_meaning()[meaning]


def all_meanings() -> List[ShiftMeaning]:
    return list(_by_meaning())


def _normalize(text):
    return " ".join(text.lower().split())


def meanings_of(text: str) -> Tuple[ShiftMeaning, ...]:
    """Every meaning the text can carry (one, or two for same-plane texts)."""
    found = _by_text().get(_normalize(text))
    if not found:
        raise NotAnInstructionError(f"not an instruction: {text!r}")
    return tuple(s.meaning for s in found)


def resolve(text: str, c_i=None) -> Sentence:
    """Look up the sentence record for ``text``, using ``c_i`` to break ties."""
    found = _by_text().get(_normalize(text))
    if not found:
        raise NotAnInstructionError(f"not an instruction: {text!r}")
    if len(found) == 1:
        return found[0]
    if c_i is not None:
        for s in found:
            if s.meaning.applicable(c_i):
                return s
    raise AmbiguousInstructionError(
        f"{text!r} has meanings {', '.join(str(s.meaning) for s in found)}; "
        "pass the initial configuration to pick one"
    )


def parse_instruction(text: str, c_i=None) -> ShiftMeaning:
    return resolve(text, c_i).meaning


# ---------------------------------------------------------------------------
# vocabulary

class Vocabulary:
    def __init__(self, words):
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words

    def encode(self, text):
        out = []
        for w in text.lower().split(" "):
            if w not in self.index:
                raise UnknownTokenError(w)
            out.append(self.index[w])
        return out

    def decode(self, indices):
        return " ".join(self.words[i] for i in indices)


@lru_cache(maxsize=None)
def vocabulary() -> Vocabulary:
    words = sorted({w for s in _build() for w in s.text.split()})
    return Vocabulary(words)


def tokenize(text: str, vocab: Optional[Vocabulary] = None) -> List[int]:
    return (vocab or vocabulary()).encode(text)


# ---------------------------------------------------------------------------
# logical expressions

@dataclass(frozen=True)
class Leaf:
    text: str

    def __post_init__(self):
        meanings_of(self.text)  # raises on non-members

    @property
    def meanings(self):
        return meanings_of(self.text)


@dataclass(frozen=True)
class Not:
    child: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


Expr = Union[Leaf, Not, And, Or]


def leaves(expr) -> List[Leaf]:
    if isinstance(expr, Leaf):
        return [expr]
    if isinstance(expr, Not):
        return leaves(expr.child)
    return leaves(expr.left) + leaves(expr.right)


def to_text(expr) -> str:
    """Fully parenthesized printer; ``parse_expression(to_text(e)) == e``."""
    if isinstance(expr, Leaf):
        return "{" + expr.text + "}"
    if isinstance(expr, Not):
        return "not " + to_text(expr.child)
    op = "and" if isinstance(expr, And) else "or"
    return f"({to_text(expr.left)} {op} {to_text(expr.right)})"


_TOKEN = re.compile(r"\s*(?:(\{[^{}]*\})|(\()|(\))|(\w+))")


def _lex(text):
    pos = 0
    out = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("leaf", m.group(1)[1:-1].strip(), start))
        elif m.group(2):
            out.append(("(", "(", start))
        elif m.group(3):
            out.append((")", ")", start))
        else:
            word = m.group(4).lower()
            if word not in ("and", "or", "not"):
                raise ExpressionSyntaxError(
                    f"bare word {m.group(4)!r}; wrap instructions in braces", start
                )
            out.append((word, word, start))
        pos = m.end()
    out.append(("eof", None, len(text)))
    return out


class _Parser:
    # expr := term ('or' term)* ; term := factor ('and' factor)*
    # factor := 'not' factor | '(' expr ')' | '{' instruction '}'

    def __init__(self, text):
        self.tokens = _lex(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok[0] != kind:
            raise ExpressionSyntaxError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def parse(self):
        e = self.expr()
        self.expect("eof")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "or":
            self.advance()
            e = Or(e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] == "and":
            self.advance()
            e = And(e, self.factor())
        return e

    def factor(self):
        kind, value, pos = self.peek()
        if kind == "not":
            self.advance()
            return Not(self.factor())
        if kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "leaf":
            self.advance()
            return Leaf(_normalize(value))
        raise ExpressionSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse_expression(text: str) -> Expr:
    return _Parser(text).parse()


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


def _leaf_pool(kind, direction=None):
    texts = []
    for s in _build():
        if s.meaning.slot.kind == kind and (direction is None or s.meaning.direction == direction):
            if s.text not in texts:
                texts.append(s.text)
    return texts


def _maybe_not(rng, e):
    return Not(e) if rng.random() < 0.5 else e


def sample_expression(kind: int, rng) -> Expr:
    """Random expression of one of the three evaluation families.

    1: two above 0->1 instructions on different slots joined by ``and``;
    2: above ``and`` (possibly negated) close;
    3: (above and close) or (above and close), every leaf negated with p=0.5.
    """
    above_up = _leaf_pool("above", sem.UP)
    above_any = _leaf_pool("above")
    close_any = _leaf_pool("close")
    if kind == 1:
        a = _pick(rng, above_up)
        slot_a = meanings_of(a)[0].slot
        b = _pick(rng, [t for t in above_up if meanings_of(t)[0].slot != slot_a])
        return And(Leaf(a), Leaf(b))
    if kind == 2:
        return And(Leaf(_pick(rng, above_any)), _maybe_not(rng, Leaf(_pick(rng, close_any))))
    if kind == 3:
        parts = []
        for _ in range(2):
            a = _maybe_not(rng, Leaf(_pick(rng, above_any)))
            c = _maybe_not(rng, Leaf(_pick(rng, close_any)))
            parts.append(And(a, c))
        return Or(*parts)
    raise ValueError(f"expression kind must be 1, 2 or 3, got {kind}")
