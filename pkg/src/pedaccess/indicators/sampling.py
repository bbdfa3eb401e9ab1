"""Sample points along the pedestrian network and their access distances."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import DataError
from ..geometry.shapes import interpolate_along
from ..network.paths import NodeDistanceField
from ..osm.graph import PedestrianGraph


@dataclass
class SamplePoints:
    """Column-oriented sample point table.

    ``n1``/``n2`` are OSM node ids of the host edge's terminals and ``l1``/
    ``l2`` the distances along the edge to each of them.
    """

    id: np.ndarray
    x: np.ndarray
    y: np.ndarray
    edge: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    hex: np.ndarray

    def __len__(self) -> int:
        return len(self.id)

    def subset(self, mask) -> "SamplePoints":
        return SamplePoints(**{f.name: getattr(self, f.name)[mask] for f in fields(self)})

    @classmethod
    def empty(cls) -> "SamplePoints":
        i, f = np.empty(0, dtype=np.int64), np.empty(0)
        return cls(i, f, f, i, i, i, f, f, i)


def generate_sample_points(g: PedestrianGraph, interval: float) -> SamplePoints:
    """Points every ``interval`` metres along each edge, starting at its first node.

    A point at offset 0 sits on a node; when an earlier edge (lower index)
    already placed a point on that node the duplicate is skipped.
    """
    if interval <= 0:
        raise DataError("sample interval must be positive")
    cols = {k: [] for k in ("x", "y", "edge", "n1", "n2", "l1", "l2")}
    seen_nodes: set[int] = set()
    for k in range(g.n_edges):
        length = float(g.length[k])
        offsets = np.arange(0.0, length, interval)
        u, v = int(g.u[k]), int(g.v[k])
        if u in seen_nodes:
            offsets = offsets[1:]
        seen_nodes.add(u)
        if len(offsets) == 0:
            continue
        pts = interpolate_along(g.polylines[k], offsets)
        pts[offsets == 0] = g.xy[u]
        n = len(offsets)
        cols["x"].append(pts[:, 0])
        cols["y"].append(pts[:, 1])
        cols["edge"].append(np.full(n, k))
        cols["n1"].append(np.full(n, g.node_ids[u]))
        cols["n2"].append(np.full(n, g.node_ids[v]))
        cols["l1"].append(offsets)
        cols["l2"].append(length - offsets)
    if not cols["x"]:
        return SamplePoints.empty()
    cat = {k: np.concatenate(v) for k, v in cols.items()}
    n = len(cat["x"])
    return SamplePoints(np.arange(n), cat["x"], cat["y"], cat["edge"].astype(np.int64),
                        cat["n1"].astype(np.int64), cat["n2"].astype(np.int64), cat["l1"], cat["l2"],
                        np.full(n, -1, dtype=np.int64))


def filter_sample_points(points: SamplePoints, hex_population: np.ndarray, threshold: float) -> SamplePoints:
    """Keep points whose hex population estimate is at least ``threshold``."""
    hex_population = np.asarray(hex_population, dtype=float)
    ok = points.hex >= 0
    keep = np.zeros(len(points), dtype=bool)
    keep[ok] = hex_population[points.hex[ok]] >= threshold
    return points.subset(keep)


def terminal_indices(g: PedestrianGraph, points: SamplePoints) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Graph indices of each point's terminals and a mask of points to omit.

    A point is omitted when either terminal node is absent from the graph.
    """
    def lookup(ids):
        pos = np.searchsorted(g.node_ids, ids)
        pos = np.clip(pos, 0, max(g.n_nodes - 1, 0))
        found = g.node_ids[pos] == ids if g.n_nodes else np.zeros(len(ids), bool)
        return np.where(found, pos, -1)
    i1, i2 = lookup(points.n1), lookup(points.n2)
    return i1, i2, (i1 < 0) | (i2 < 0)


def sample_access_distance(g: PedestrianGraph, points: SamplePoints,
                           field: NodeDistanceField) -> tuple[np.ndarray, np.ndarray]:
    """Shortest distance from each point to the nearest destination via either terminal.

    Returns ``(distance, omitted)``; ``distance`` is NaN where neither
    terminal reached a destination, and ``omitted`` flags points whose
    terminals are not in the graph.
    """
    i1, i2, omitted = terminal_indices(g, points)
    a1 = np.where(~omitted, i1, 0)
    a2 = np.where(~omitted, i2, 0)
    d1 = np.where(field.reached[a1], points.l1 + field.dist[a1], np.inf)
    d2 = np.where(field.reached[a2], points.l2 + field.dist[a2], np.inf)
    d = np.minimum(d1, d2)
    d[~np.isfinite(d) | omitted] = np.nan
    return d, omitted
