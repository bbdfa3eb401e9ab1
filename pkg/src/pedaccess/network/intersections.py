"""Street intersection cleaning by spatial consolidation of junction nodes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NetworkError
from ..geometry.index import GridIndex
from ..osm.graph import PedestrianGraph


@dataclass
class IntersectionSet:
    """Consolidated intersection points; ``members[k]`` lists the node indices merged into point k."""

    xy: np.ndarray
    members: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.xy)

    def hex_counts(self, grid) -> np.ndarray:
        counts = np.zeros(len(grid), dtype=np.int64)
        if len(self):
            ids = grid.locate(self.xy[:, 0], self.xy[:, 1])
            np.add.at(counts, ids[ids >= 0], 1)
        return counts


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def cluster_points(xy: np.ndarray, tolerance: float) -> list[list[int]]:
    """Connected components of the graph linking points at most ``tolerance`` apart."""
    n = len(xy)
    parent = list(range(n))
    index = GridIndex(xy, cell_size=max(tolerance, 1e-9))
    for i, (x, y) in enumerate(xy.tolist()):
        for j in index.within(x, y, tolerance).tolist():
            if j > i:
                a, b = _find(parent, i), _find(parent, j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(_find(parent, i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def consolidate_intersections(g: PedestrianGraph, tolerance: float = 12.0) -> IntersectionSet:
    """Merge junction nodes (degree >= 3) lying within ``tolerance`` of each other.

    Clusters are the transitive closure of the distance relation and each
    collapses to the centroid of its member nodes. A centroid can land within
    tolerance of a neighbouring cluster's centroid, so merging repeats on the
    centroids until no two points are that close.
    """
    if tolerance <= 0:
        raise NetworkError("consolidation tolerance must be positive")
    cand = np.flatnonzero(g.degree() >= 3)
    members = [np.array([i], dtype=np.int64) for i in cand.tolist()]
    xy = g.xy[cand].copy() if len(cand) else np.empty((0, 2))
    while len(xy) > 1:
        groups = cluster_points(xy, tolerance)
        if len(groups) == len(xy):
            break
        members = [np.sort(np.concatenate([members[i] for i in grp])) for grp in groups]
        xy = np.array([g.xy[m].mean(axis=0) for m in members])
    return IntersectionSet(np.asarray(xy, dtype=float).reshape(-1, 2), members)
