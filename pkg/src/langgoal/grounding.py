"""Simulated grounding: execute generated goals with a symbolic executor.

The executor stands in for a goal-conditioned policy. On success it moves
the scene straight to the goal configuration; on failure the scene is left
as it was. Agents get several attempts per instruction and resample goals
they have not tried yet, without resetting the scene.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from . import goalgen
from . import instructions as ins
from . import oracle as orc
from . import semantics as sem

MAX_REDRAWS = 50
SEQUENCE_CAP = 50
EXPRESSION_MIX = ((1, 100), (2, 200), (3, 200))
EXPRESSION_POOL = 100

REFERENCE_RATES = {"transition": {"sr1": 0.89, "sr5": 0.99}, "expression": {"sr1": 0.74, "sr5": 0.94},
                "sequence": {"n_s": 14.9}}


@dataclass(frozen=True)
class ExecutorConfig:
    p_fail: float = 0.0
    mode: str = "oracle-success"

    def __post_init__(self):
        if self.mode not in ("oracle-success", "stochastic"):
            raise ValueError(f"unknown executor mode {self.mode!r}")
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")

    @property
    def effective_p_fail(self):
        return 0.0 if self.mode == "oracle-success" else self.p_fail


@dataclass(frozen=True)
class AttemptOutcome:
    success: bool
    attempts_used: int
    achieved: sem.Config
    goals: tuple = ()


def execute(c_current, goal, cfg: ExecutorConfig, rng):
    """Returns (reached, configuration after the episode)."""
    if goal is None or not sem.is_valid(goal):
        return False, tuple(c_current)
    p = cfg.effective_p_fail
    if p > 0 and rng.random() < p:
        return False, tuple(c_current)
    return True, tuple(goal)


def _sampler(model) -> Callable:
    """Normalize a CVAEModel or a callable (c_i, text, n, rng) -> configs."""
    if isinstance(model, goalgen.CVAEModel):
        return lambda c_i, text, n, rng: goalgen.sample_goals(model, c_i, text, n, rng)
    return model


def _try_again(propose, check, c_i, cfg, max_attempts, rng):
    current = tuple(c_i)
    tried = []
    for attempt in range(1, max_attempts + 1):
        goal = propose(tried)
        if goal is not None:
            tried.append(goal)
        _, current = execute(current, goal, cfg, rng)
        if check(current):
            return AttemptOutcome(True, attempt, current, tuple(tried))
    return AttemptOutcome(False, max_attempts, current, tuple(tried))


def attempt_instruction(model, cfg: ExecutorConfig, c_i, sentence, max_attempts: int = 5, rng=None):
    text = sentence.text if isinstance(sentence, ins.Sentence) else sentence
    meaning = sentence.meaning if isinstance(sentence, ins.Sentence) else ins.parse_instruction(text, c_i)
    sample = _sampler(model)
    c_i = tuple(c_i)

    def propose(tried):
        goal = sample(c_i, text, 1, rng)[0]
        for _ in range(MAX_REDRAWS):
            if goal not in tried:
                break
            goal = sample(c_i, text, 1, rng)[0]
        return goal

    return _try_again(propose, lambda c: meaning.holds(c_i, c), c_i, cfg, max_attempts, rng)


def attempt_expression(model, cfg: ExecutorConfig, c_i, expr, max_attempts: int = 5, rng=None,
                       pool: int = EXPRESSION_POOL):
    """Leaves are visited in random order; the first leaf whose generated
    goals contain an untried configuration satisfying ``expr`` supplies it."""
    sample = _sampler(model)
    c_i = tuple(c_i)
    leaves = ins.leaves(expr)

    def propose(tried):
        for k in rng.permutation(len(leaves)):
            drawn = sample(c_i, leaves[k].text, pool, rng)
            ok = [g for g in drawn if g not in tried and orc.satisfied(c_i, g, expr)]
            if ok:
                return ok[int(rng.integers(len(ok)))]
        return None

    return _try_again(propose, lambda c: orc.satisfied(c_i, c, expr), c_i, cfg, max_attempts, rng)


@dataclass
class ProtocolReport:
    protocol: str
    episodes: int
    p_fail: float
    seed: Optional[int]
    sr1: Optional[float] = None
    sr5: Optional[float] = None
    n_s: Optional[float] = None

    def to_json(self):
        d = {k: v for k, v in asdict(self).items() if v is not None or k == "seed"}
        d["reference"] = REFERENCE_RATES[self.protocol]
        return d

    def dumps(self):
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"


def _rates(outcomes):
    sr1 = sum(o.success and o.attempts_used == 1 for o in outcomes) / len(outcomes)
    sr5 = sum(o.success for o in outcomes) / len(outcomes)
    return sr1, sr5


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


def transition_protocol(model, cfg: ExecutorConfig, rng, repeats: int = 5, max_attempts: int = 5,
                        seed=None, return_outcomes=False):
    valid = sem.enumerate_valid()
    outcomes = []
    for s in ins.build_instruction_set():
        starts = [c for c in valid if s.meaning.applicable(c)]
        for _ in range(repeats):
            outcomes.append(attempt_instruction(model, cfg, _pick(rng, starts), s, max_attempts, rng))
    sr1, sr5 = _rates(outcomes)
    report = ProtocolReport("transition", len(outcomes), cfg.effective_p_fail, seed, sr1=sr1, sr5=sr5)
    return (report, outcomes) if return_outcomes else report


def sample_episode_expression(kind, rng, max_tries: int = 1000):
    """Draw (expression, c_i) with a non-empty compatible goal set."""
    valid = sem.enumerate_valid()
    for _ in range(max_tries):
        expr = ins.sample_expression(kind, rng)
        c_i = _pick(rng, valid)
        if orc.compatible_set_expr(c_i, expr):
            return expr, c_i
    raise RuntimeError(f"could not draw a satisfiable type-{kind} expression")


def expression_protocol(model, cfg: ExecutorConfig, n_expr: int = 500, rng=None, max_attempts: int = 5,
                        seed=None, return_outcomes=False):
    total = sum(c for _, c in EXPRESSION_MIX)
    outcomes = []
    for kind, count in EXPRESSION_MIX:
        for _ in range(round(count * n_expr / total)):
            expr, c_i = sample_episode_expression(kind, rng)
            outcomes.append(attempt_expression(model, cfg, c_i, expr, max_attempts, rng))
    sr1, sr5 = _rates(outcomes)
    report = ProtocolReport("expression", len(outcomes), cfg.effective_p_fail, seed, sr1=sr1, sr5=sr5)
    return (report, outcomes) if return_outcomes else report


def sequence_protocol(model, cfg: ExecutorConfig, n_seq: int = 20, rng=None, max_attempts: int = 5,
                      cap: int = SEQUENCE_CAP, seed=None):
    """Mean number of consecutive successes before the first failure."""
    valid = sem.enumerate_valid()
    sentences = ins.build_instruction_set()
    counts = []
    for _ in range(n_seq):
        current = _pick(rng, valid)
        n_ok = 0
        while n_ok < cap:
            s = _pick(rng, [s for s in sentences if s.meaning.applicable(current)])
            out = attempt_instruction(model, cfg, current, s, max_attempts, rng)
            if not out.success:
                break
            n_ok += 1
            current = out.achieved
        counts.append(n_ok)
    return ProtocolReport("sequence", n_seq, cfg.effective_p_fail, seed, n_s=float(np.mean(counts)))


def oracle_sampler(c_i, text, n, rng):
    """Perfect generator: uniform draws from the compatible set."""
    pool = sorted(orc.compatible_set_expr(c_i, ins.Leaf(text)))
    if not pool:
        # inapplicable leaf: nothing to aim for, so any valid configuration
        pool = list(sem.enumerate_valid())
    return [pool[int(i)] for i in rng.integers(len(pool), size=n)]
