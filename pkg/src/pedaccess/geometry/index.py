"""Uniform grid bucket index for radius-bounded nearest-point queries."""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np


class GridIndex:
    """Buckets points into square cells of ``cell_size`` metres.

    ``query`` returns every element that could lie within the radius (a
    superset); ``nearest_within`` refines that to the exact answer.
    """

    def __init__(self, xy, ids=None, cell_size: float = 100.0):
        self.xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        self.ids = np.arange(len(self.xy)) if ids is None else np.asarray(ids)
        self.cell_size = float(cell_size)
        buckets = defaultdict(list)
        cells = np.floor(self.xy / self.cell_size).astype(np.int64)
        for i, (cx, cy) in enumerate(cells.tolist()):
            buckets[(cx, cy)].append(i)
        self.buckets = {k: np.array(v, dtype=np.int64) for k, v in buckets.items()}

    def __len__(self) -> int:
        return len(self.xy)

    def query(self, x: float, y: float, r: float) -> np.ndarray:
        """Row positions of candidates within ``r`` of ``(x, y)``."""
        cs = self.cell_size
        i0, i1 = math.floor((x - r) / cs), math.floor((x + r) / cs)
        j0, j1 = math.floor((y - r) / cs), math.floor((y + r) / cs)
        if (i1 - i0 + 1) * (j1 - j0 + 1) > 4 * len(self.buckets):
            hits = list(self.buckets.values())
        else:
            hits = [self.buckets[k] for i in range(i0, i1 + 1) for j in range(j0, j1 + 1)
                    if (k := (i, j)) in self.buckets]
        if not hits:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(hits)

    def within(self, x: float, y: float, r: float) -> np.ndarray:
        cand = self.query(x, y, r)
        d = np.hypot(self.xy[cand, 0] - x, self.xy[cand, 1] - y)
        return cand[d <= r]

    def nearest_within(self, x: float, y: float, r: float):
        """``(id, distance)`` of the closest element within ``r``, else None.

        Equal distances resolve to the lowest id.
        """
        cand = self.query(x, y, r)
        if len(cand) == 0:
            return None
        d = np.hypot(self.xy[cand, 0] - x, self.xy[cand, 1] - y)
        ok = d <= r
        if not ok.any():
            return None
        cand, d = cand[ok], d[ok]
        best = d.min()
        tied = cand[d == best]
        ids = self.ids[tied]
        k = int(np.argmin(ids))
        return ids[k].item(), float(best)


def nearest_within(index: GridIndex, p, r: float):
    return index.nearest_within(float(p[0]), float(p[1]), r)
