"""Synthetic social-partner data collection and the five evaluation splits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

from . import instructions as ins
from . import semantics as sem

TEST2_PAIRS = (
    ("010000000", "put blue close_to green"),
    ("001000000", "put green below red"),
)
TEST3_CI = "110000000"
TEST4_SENTENCES = ("put green on_top_of red", "put blue far_from red")

Key = Tuple[sem.Config, str]


class NoChangeError(ValueError):
    pass


@dataclass(frozen=True)
class Triplet:
    c_i: sem.Config
    c_f: sem.Config
    sentence: ins.Sentence

    @property
    def key(self) -> Key:
        return (self.c_i, self.sentence.text)

    def to_json(self):
        return {"ci": sem.to_str(self.c_i), "cf": sem.to_str(self.c_f), "s": self.sentence.text}

    @classmethod
    def from_json(cls, d):
        c_i, c_f = sem.from_str(d["ci"]), sem.from_str(d["cf"])
        found = [s for s in ins.build_instruction_set()
                 if s.text == d["s"] and s.meaning.holds(c_i, c_f)]
        if not found:
            raise ValueError(f"sentence {d['s']!r} does not describe {d['ci']} -> {d['cf']}")
        return cls(c_i, c_f, found[0])

    def is_consistent(self) -> bool:
        return (
            sem.is_valid(self.c_i)
            and sem.is_valid(self.c_f)
            and self.sentence.meaning.holds(self.c_i, self.c_f)
        )


def social_partner_describe(c_i, c_f, rng) -> ins.Sentence:
    changes = sem.diff(c_i, c_f)
    if not changes:
        raise NoChangeError("initial and final configurations are identical")
    slot, direction = changes[int(rng.integers(len(changes)))]
    options = ins.sentences_for(ins.ShiftMeaning(slot, direction))
    return options[int(rng.integers(len(options)))]


def generate_dataset(n: int = 5000, rng=None) -> List[Triplet]:
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    valid = sem.enumerate_valid()
    out = []
    for _ in range(n):
        c_i = valid[int(rng.integers(len(valid)))]
        j = int(rng.integers(len(valid) - 1))
        c_f = valid[j if valid[j] < c_i else j + 1]
        out.append(Triplet(c_i, c_f, social_partner_describe(c_i, c_f, rng)))
    return out


def save_dataset(triplets, path):
    with open(path, "w", encoding="utf-8") as f:
        for t in triplets:
            f.write(json.dumps(t.to_json(), sort_keys=True) + "\n")


def load_dataset(path) -> List[Triplet]:
    with open(path, encoding="utf-8") as f:
        return [Triplet.from_json(json.loads(line)) for line in f if line.strip()]


@dataclass
class SplitSpec:
    train: List[Triplet]
    tests: Dict[int, List[Key]] = field(default_factory=dict)

    def manifest(self):
        return {
            "n_train": len(self.train),
            "tests": {
                str(k): [[sem.to_str(c), s] for c, s in v] for k, v in sorted(self.tests.items())
            },
        }

    def save_manifest(self, path):
        Path(path).write_text(json.dumps(self.manifest(), indent=1, sort_keys=True) + "\n")


def _unique(keys):
    seen = {}
    for k in keys:
        seen.setdefault(k, None)
    return list(seen)


def build_splits(dataset: List[Triplet]) -> SplitSpec:
    """Hold out the test-2..5 input pairs and keep the rest for training.

    Tests 2 and 5 are fixed pairs; tests 3 and 4 gather every pair of the
    dataset that uses the held-out initial configuration or one of the
    held-out sentences. Test 1 is every distinct pair left in training.
    """
    if not dataset:
        raise ValueError("empty dataset")
    ci3 = sem.from_str(TEST3_CI)
    test2 = [(sem.from_str(c), s) for c, s in TEST2_PAIRS]
    test5 = [(ci3, s) for s in TEST4_SENTENCES]

    all_keys = _unique(t.key for t in dataset)
    test3 = [k for k in all_keys if k[0] == ci3 and k not in test5]
    test4 = [k for k in all_keys if k[1] in TEST4_SENTENCES and k not in test5]

    held = set(test2) | set(test3) | set(test4) | set(test5)
    train = [
        t for t in dataset
        if t.key not in held and t.c_i != ci3 and t.sentence.text not in TEST4_SENTENCES
    ]
    test1 = _unique(t.key for t in train)
    return SplitSpec(train, {1: test1, 2: test2, 3: test3, 4: test4, 5: test5})
