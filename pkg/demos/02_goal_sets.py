"""
Instructions and their goal sets
================================

Every instruction shifts one relation. The set of final configurations it
allows is found by brute force, and logical combinations become set algebra.
"""

import numpy as np

from langgoal import instructions as ins, oracle as orc, semantics as sem

sentences = ins.build_instruction_set()
print(len(sentences), "sentences over", len(ins.vocabulary()), "words")
for s in sentences[:3] + sentences[-3:]:
    print(f"  {s.text:40s} {s.meaning}")

# <codecell>
# one text, two readings: the starting configuration picks the right one
text = "put red and green on_the_same_plane"
for c_i in (sem.realize(sem.Stack2(0, 1)), sem.realize(sem.Stack2(1, 0))):
    print(sem.to_str(c_i), "->", ins.parse_instruction(text, c_i))

# <codecell>
# the goal set of a single instruction from the empty table
c_i = sem.ZERO
goals = orc.compatible_set(c_i, ins.parse_instruction("put red above green"))
print(len(goals), "configurations have red on green")

oracle = orc.Oracle()
print(len(oracle), "(c_i, sentence) pairs; mean goal-set size", round(oracle.mean_set_size(), 2))

# <codecell>
# expressions
expr = ins.parse_expression("{put red above green} and {put blue above red}")
print(ins.to_text(expr))
for c in sorted(orc.compatible_set_expr(c_i, expr)):
    print("  ", sem.to_str(c), sem.structure_of(c).label())

neg = ins.parse_expression("{put red close_to green} and not {put blue close_to red}")
print(len(orc.compatible_set_expr(c_i, neg)), "goals for:", ins.to_text(neg))

# random expressions of the three evaluation kinds
rng = np.random.default_rng(1)
for kind in (1, 2, 3):
    e = ins.sample_expression(kind, rng)
    print(kind, ins.to_text(e))
