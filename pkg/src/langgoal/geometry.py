"""Continuous block scenes and the threshold rules that map them to configurations.

Blocks are cubes of side ``h`` whose positions are their centers. A block
resting on the table has z = h/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import semantics as sem


class SamplerExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class MappingParams:
    block_side: float = 0.05
    close_threshold: float = 0.075
    above_xy_tol: float = 0.03
    above_z_tol: float = 0.02

    def __post_init__(self):
        h = self.block_side
        if not h < self.close_threshold < 2 * h:
            raise ValueError("close_threshold must lie strictly between h and 2h")
        if not 0 < self.above_xy_tol <= h:
            raise ValueError("above_xy_tol must lie in (0, h]")
        if not 0 < self.above_z_tol < h / 2:
            raise ValueError("above_z_tol must lie in (0, h/2)")


DEFAULT_PARAMS = MappingParams()


def eval_close(p_i, p_j, params: MappingParams = DEFAULT_PARAMS) -> bool:
    d = np.asarray(p_i, dtype=float) - np.asarray(p_j, dtype=float)
    return bool(np.sqrt(d @ d) < params.close_threshold)


def eval_above(p_i, p_j, params: MappingParams = DEFAULT_PARAMS) -> bool:
    """True when block i rests directly on block j."""
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    dz = p_i[2] - p_j[2]
    dxy = np.hypot(p_i[0] - p_j[0], p_i[1] - p_j[1])
    return bool(abs(dz - params.block_side) < params.above_z_tol and dxy < params.above_xy_tol)


def scene_to_config(scene, params: MappingParams = DEFAULT_PARAMS) -> sem.Config:
    scene = np.asarray(scene, dtype=float)
    bits = [eval_close(scene[i], scene[j], params) for i, j in sem.CLOSE_PAIRS]
    bits += [eval_above(scene[i], scene[j], params) for i, j in sem.ABOVE_PAIRS]
    return sem.from_bits(bits)


def check_scene(scene, params: MappingParams = DEFAULT_PARAMS) -> bool:
    """Physical sanity: blocks above the floor and not interpenetrating."""
    scene = np.asarray(scene, dtype=float)
    if scene.shape != (3, 3) or np.any(scene[:, 2] < 0):
        return False
    for i, j in sem.CLOSE_PAIRS:
        if np.linalg.norm(scene[i] - scene[j]) < params.block_side - 1e-12:
            return False
    return True


def _ring(rng, center, r_lo, r_hi):
    r = rng.uniform(r_lo, max(r_lo, r_hi))
    theta = rng.uniform(0, 2 * np.pi)
    return center + r * np.array([np.cos(theta), np.sin(theta)])


def _propose(structure, rng, params):
    h = params.block_side
    dc = params.close_threshold
    table = h / 2
    jitter = 0.1 * params.above_xy_tol
    xy = np.zeros((3, 2))
    z = np.full(3, table)

    if isinstance(structure, sem.Flat):
        want = {pair: bool(b) for pair, b in zip(sem.CLOSE_PAIRS, structure.pattern)}
        xy[0] = rng.uniform(-0.1, 0.1, size=2)
        for k in (1, 2):
            partners = [i for i in range(k) if want[(i, k)]]
            if partners:
                xy[k] = _ring(rng, xy[rng.choice(partners)], h, dc)
            else:
                xy[k] = _ring(rng, xy[0], dc, 4 * dc)
    elif isinstance(structure, sem.Stack2):
        t, b, k = structure.top, structure.bottom, structure.other
        xy[b] = rng.uniform(-0.1, 0.1, size=2)
        xy[t] = xy[b] + rng.uniform(-jitter, jitter, size=2)
        z[t] = table + h
        # horizontal reach of the top block's closeness from table level
        reach = np.sqrt(dc**2 - h**2)
        if structure.third == "isolated":
            xy[k] = _ring(rng, xy[b], dc + jitter, 4 * dc)
        elif structure.third == "near-bottom":
            xy[k] = _ring(rng, xy[b], reach + jitter, dc - jitter)
        else:
            xy[k] = _ring(rng, xy[b], h, reach - jitter)
    elif isinstance(structure, sem.Stack3):
        col = rng.uniform(-0.1, 0.1, size=2)
        for level, o in enumerate((structure.bottom, structure.mid, structure.top)):
            xy[o] = col + rng.uniform(-jitter, jitter, size=2)
            z[o] = table + level * h
    elif isinstance(structure, sem.Pyramid):
        top = structure.top
        a, b = [o for o in range(3) if o != top]
        xy[a] = rng.uniform(-0.1, 0.1, size=2)
        xy[b] = _ring(rng, xy[a], h, min(dc, 2 * params.above_xy_tol))
        xy[top] = (xy[a] + xy[b]) / 2
        z[top] = table + h
    else:
        raise TypeError(f"not a structure: {structure!r}")
    return np.column_stack([xy, z])


def sample_scene(structure, rng, params: MappingParams = DEFAULT_PARAMS, max_tries: int = 1000):
    """Draw a 3x3 array of block centers whose configuration is ``realize(structure)``."""
    target = sem.realize(structure)
    for _ in range(max_tries):
        scene = _propose(structure, rng, params)
        if check_scene(scene, params) and scene_to_config(scene, params) == target:
            return scene
    raise SamplerExhausted(f"no scene found for {structure} after {max_tries} draws")


def empirical_valid_set(n_per_structure, rng, params: MappingParams = DEFAULT_PARAMS):
    if n_per_structure < 1:
        raise ValueError("n_per_structure must be >= 1")
    found = set()
    for s in sem.all_structures():
        for _ in range(n_per_structure):
            found.add(scene_to_config(sample_scene(s, rng, params), params))
    return found
