"""
Training the goal generator
===========================

Collect descriptions from a synthetic partner, train the conditional VAE,
then measure how well its samples match the brute-force goal sets.
Full training takes a minute or two on one core; set EPOCHS lower for a
quick look.
"""

import time

import numpy as np

from langgoal import corpus, goalgen, grounding, oracle as orc, semantics as sem
from langgoal.evaluation import evaluate_testsets

EPOCHS = 150
SEED = 0

data = corpus.generate_dataset(5000, np.random.default_rng(SEED))
splits = corpus.build_splits(data)
print(len(splits.train), "training triplets;", {k: len(v) for k, v in splits.tests.items()}, "test pairs")
t = data[0]
print("example:", sem.to_str(t.c_i), "->", sem.to_str(t.c_f), "|", t.sentence.text)

# <codecell>
start = time.perf_counter()
hp = goalgen.Hyperparams(epochs=EPOCHS, seed=SEED)
model, history = goalgen.train(splits.train, hp)
print(f"trained in {time.perf_counter() - start:.0f}s, final loss {history[-1]['mean_total']:.3f}")

# <codecell>
# goals for an instruction the model has never seen from this configuration
rng = np.random.default_rng(1)
c_i = sem.from_str(corpus.TEST3_CI)
for g in sorted(set(goalgen.sample_goals(model, c_i, "put green on_top_of red", 20, rng))):
    print("  ", sem.to_str(g), sem.structure_of(g).label() if sem.is_valid(g) else "invalid")

# <codecell>
oracle = orc.Oracle()
report = evaluate_testsets(model, oracle, splits, n=100, seed=SEED)
print(report.pretty())

# <codecell>
# trying again after failures
for p in (0.0, 0.5):
    cfg = grounding.ExecutorConfig(p_fail=p, mode="stochastic")
    r = grounding.transition_protocol(model, cfg, np.random.default_rng(2))
    print(f"p_fail={p}: SR1 {r.sr1:.2f}  SR5 {r.sr5:.2f}")
seq = grounding.sequence_protocol(model, grounding.ExecutorConfig(p_fail=0.2, mode="stochastic"),
                                  20, np.random.default_rng(3))
print("mean successes before failure:", seq.n_s)
