"""Compatibility probability and coverage of a goal generator over test sets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np

from . import goalgen
from .oracle import Oracle, OracleEntry

# Reference values of the original experiments (different environment).
REFERENCE_METRICS = {
    1: {"cp": 0.93, "cov": 0.97},
    2: {"cp": 0.94, "cov": 0.93},
    3: {"cp": 0.95, "cov": 0.98},
    4: {"cp": 0.90, "cov": 0.99},
    5: {"cp": 0.92, "cov": 0.98},
}


def cp_of_samples(samples, entry: OracleEntry) -> float:
    return sum(g in entry.c_f_set for g in samples) / len(samples)


def coverage_of_samples(samples, entry: OracleEntry) -> float:
    return len(set(samples) & entry.c_f_set) / len(entry.c_f_set)


def _draw(model, entry, n, rng):
    if callable(model) and not isinstance(model, goalgen.CVAEModel):
        return model(entry.c_i, entry.sentence.text, n, rng)
    return goalgen.sample_goals(model, entry.c_i, entry.sentence.text, n, rng)


def compatibility_probability(model, entry: OracleEntry, n: int = 100, rng=None) -> float:
    """``model`` is a CVAEModel or any callable (c_i, text, n, rng) -> configs."""
    return cp_of_samples(_draw(model, entry, n, rng), entry)


def coverage(model, entry: OracleEntry, n: int = 100, rng=None) -> float:
    return coverage_of_samples(_draw(model, entry, n, rng), entry)


@dataclass
class TestRow:
    test_id: int
    cp_mean: float
    cov_mean: float
    n_entries: int


@dataclass
class EvalReport:
    seed: int
    n: int
    rows: List[TestRow] = field(default_factory=list)

    def row(self, test_id) -> TestRow:
        return next(r for r in self.rows if r.test_id == test_id)

    def to_json(self):
        return {
            "seed": self.seed,
            "n": self.n,
            "tests": [asdict(r) for r in self.rows],
            "reference": {str(k): v for k, v in REFERENCE_METRICS.items()},
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def pretty(self):
        lines = ["test  n_entries  cp_mean  cov_mean"]
        for r in self.rows:
            lines.append(f"{r.test_id:>4}  {r.n_entries:>9}  {r.cp_mean:7.3f}  {r.cov_mean:8.3f}")
        return "\n".join(lines)


def evaluate_testsets(model, oracle: Oracle, splits, n: int = 100, rng=None, seed: int = 0) -> EvalReport:
    """Mean CP and coverage over each test set of ``splits``.

    Queries are sampled in test-id order then entry order, so the report is
    a deterministic function of ``rng``'s state.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    report = EvalReport(seed=seed, n=n)
    for test_id in sorted(splits.tests):
        entries = [oracle.lookup(c_i, text) for c_i, text in splits.tests[test_id]]
        if not entries:
            continue
        draws = goalgen.sample_goals_many(model, [e.key for e in entries], n, rng)
        cps = [cp_of_samples(s, e) for s, e in zip(draws, entries)]
        covs = [coverage_of_samples(s, e) for s, e in zip(draws, entries)]
        report.rows.append(TestRow(test_id, float(np.mean(cps)), float(np.mean(covs)), len(entries)))
    return report
