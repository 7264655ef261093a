"""Deterministic enumeration of a countable dense subset of a box in C^m.

Level 0 is the box center.  Level ``l >= 1`` is the grid with step
``2**(1-l) * halfwidth`` in every real coordinate (so 3 points per axis at
level 1, 5 at level 2, 9 at level 3, ...), minus the points already
emitted.  Inside a level, points are ordered by their l-infinity ring
around the center, then lexicographically by
``(re z_1, im z_1, ..., re z_m, im z_m)``.  Coordinates are dyadic
multiples of the halfwidths, so they are exact in binary floating point
whenever the box bounds are.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class Box:
    """Product of complex rectangles; ``bounds[i] = (re_lo, re_hi, im_lo, im_hi)``."""

    bounds: tuple

    def __post_init__(self):
        b = tuple(tuple(float(x) for x in r) for r in self.bounds)
        for re_lo, re_hi, im_lo, im_hi in b:
            if not (re_lo < re_hi and im_lo < im_hi):
                raise ValueError("empty box side")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def square(cls, m=1, half=1.0):
        return cls(((-half, half, -half, half),) * m)

    @property
    def m(self):
        return len(self.bounds)

    @property
    def real_bounds(self):
        """(2m, 2) array of [lo, hi] per real coordinate."""
        out = []
        for re_lo, re_hi, im_lo, im_hi in self.bounds:
            out += [(re_lo, re_hi), (im_lo, im_hi)]
        return np.array(out)

    def to_json(self):
        return [list(r) for r in self.bounds]


def _to_complex(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def _level_points(box, level):
    rb = box.real_bounds
    center = rb.mean(axis=1)
    half = (rb[:, 1] - rb[:, 0]) / 2
    if level == 0:
        return [tuple(center)], None
    per_axis = 2 ** level + 1
    steps = np.arange(per_axis) - 2 ** (level - 1)  # integer offsets
    scale = half / 2 ** (level - 1)
    pts = []
    for idx in itertools.product(steps, repeat=len(rb)):
        idx = np.array(idx)
        ring = int(np.max(np.abs(idx)))
        pts.append((ring, tuple(center + idx * scale)))
    pts.sort()
    return [p for _, p in pts], scale


class DenseEnumeration:
    """Iterator over ``s_1, s_2, ...``; each item is a length-m complex array."""

    def __init__(self, box, level_cap=None):
        self.box = box
        self.level_cap = level_cap
        self._seen = set()
        self._level = 0
        self._queue = []
        self.count = 0

    def __iter__(self):
        return self

    def __next__(self):
        while not self._queue:
            if self.level_cap is not None and self._level > self.level_cap:
                raise StopIteration
            pts, _ = _level_points(self.box, self._level)
            self._queue = [p for p in pts if p not in self._seen]
            self._level += 1
        p = self._queue.pop(0)
        self._seen.add(p)
        self.count += 1
        return _to_complex(p)

    next = __next__

    def take(self, n):
        out = []
        for _ in range(n):
            out.append(next(self))
        return np.array(out).reshape(n, self.box.m)

    def clone(self):
        other = DenseEnumeration(self.box, self.level_cap)
        other._seen = set(self._seen)
        other._level = self._level
        other._queue = list(self._queue)
        other.count = self.count
        return other


def level_size(level, m=1):
    """Cumulative number of points through ``level``."""
    return 1 if level == 0 else (2 ** level + 1) ** (2 * m)


def coverage_radius(points, box, probe_step):
    """Max distance from a probe grid over ``box`` to the nearest listed point."""
    if probe_step <= 0:
        raise ValueError("probe_step must be positive")
    pts = np.asarray(points, dtype=complex).reshape(len(points), -1) if len(points) else None
    if pts is None:
        raise ValueError("empty point list")
    rb = box.real_bounds
    axes = [np.linspace(lo, hi, int(np.ceil((hi - lo) / probe_step)) + 1) for lo, hi in rb]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(rb))
    real_pts = np.empty((len(pts), 2 * pts.shape[1]))
    real_pts[:, 0::2] = pts.real
    real_pts[:, 1::2] = pts.imag
    dist, _ = cKDTree(real_pts).query(grid)
    return float(dist.max())
