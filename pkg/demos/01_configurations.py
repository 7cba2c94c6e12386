"""
Block configurations
====================

Three blocks, nine binary relations, and which of the 512 bit patterns can
actually be built.
"""

import itertools

import numpy as np

from langgoal import geometry, semantics as sem

# each slot is one relation between a fixed pair of blocks
print([str(s) for s in sem.SLOTS])

# most bit patterns describe impossible scenes
valid = sem.enumerate_valid()
print(len(valid), "of", 2**9, "patterns are buildable")

# <codecell>
# group them by structure
by_kind = {}
for c in valid:
    by_kind.setdefault(type(sem.structure_of(c)).__name__, []).append(c)
for kind, configs in by_kind.items():
    print(f"{kind:8s} {len(configs):2d}  e.g. {sem.to_str(configs[0])}  {sem.structure_of(configs[0]).label()}")

# <codecell>
# a continuous scene for a pyramid: blue resting on red and green
rng = np.random.default_rng(0)
scene = geometry.sample_scene(sem.Pyramid(2), rng)
print(np.round(scene, 3))
print(sem.to_str(geometry.scene_to_config(scene)))

# random placements almost never produce stacks, so sample each structure on purpose
found = geometry.empirical_valid_set(10, rng)
print("sampled scenes reach", len(found), "configurations")

# <codecell>
# what two configurations differ by
a = sem.realize(sem.Stack2(0, 1, "near-both"))
b = sem.realize(sem.Flat((1, 1, 1)))
for slot, (src, dst) in sem.diff(a, b):
    print(slot, src, "->", dst)

# a pattern that breaks the rules: red above green but not close to it
bad = tuple(itertools.chain([0] * 3, [1], [0] * 5))
print(sem.to_str(bad), sem.is_valid(bad))
