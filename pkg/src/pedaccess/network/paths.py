"""Bounded shortest paths, nearest-destination fields and walkable catchments."""
from __future__ import annotations

import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import NetworkError
from ..geometry.index import GridIndex
from ..osm.graph import PedestrianGraph
from ..osm.pois import PoiSet


def _adjacency(g: PedestrianGraph):
    indptr, indices, weights = g.csr()
    return indptr.tolist(), indices.tolist(), weights.tolist()


def _dijkstra(adj, sources: Sequence[int], cutoff: float) -> dict[int, float]:
    """Multi-source Dijkstra over CSR lists, settling nodes with distance <= cutoff.

    Heap entries are ``(distance, node)`` so equal distances settle in node
    order, which keeps every output reproducible.
    """
    indptr, indices, weights = adj
    best: dict[int, float] = {}
    heap = [(0.0, s) for s in sorted(set(sources))]
    heapq.heapify(heap)
    done: dict[int, float] = {}
    push, pop = heapq.heappush, heapq.heappop
    for _, s in heap:
        best[s] = 0.0
    while heap:
        d, u = pop(heap)
        if u in done:
            continue
        done[u] = d
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if v in done:
                continue
            nd = d + weights[k]
            if nd <= cutoff and nd < best.get(v, np.inf):
                best[v] = nd
                push(heap, (nd, v))
    return done


def bounded_sssp(g: PedestrianGraph, source: int, cutoff: float) -> dict[int, float]:
    """Network distance from node id ``source`` to every node within ``cutoff`` metres.

    Nodes farther than the cutoff, or unreachable, are absent from the result.
    """
    if cutoff < 0:
        raise NetworkError("cutoff must be non-negative")
    if not g.has_node(source):
        raise NetworkError(f"unknown source node {source}")
    done = _dijkstra(_adjacency(g), [g.index_of(source)], cutoff)
    ids = g.node_ids
    return {int(ids[i]): d for i, d in sorted(done.items())}


@dataclass
class NodeDistanceField:
    """Distance from each node to the nearest destination of one class.

    ``reached[i]`` is False where no destination lies within the cutoff; the
    matching ``dist`` entry is then meaningless and must not be read.
    """

    cls: str
    cutoff: float
    dist: np.ndarray
    reached: np.ndarray
    diagnostics: dict[str, int] = field(default_factory=dict)

    def get(self, i: int) -> float | None:
        return float(self.dist[i]) if self.reached[i] else None


def snap_to_nodes(g: PedestrianGraph, xy: np.ndarray, snap_max: float) -> np.ndarray:
    """Index of the nearest node within ``snap_max`` for each point, -1 if none."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if len(xy) == 0:
        return np.empty(0, dtype=np.int64)
    index = GridIndex(g.xy, cell_size=max(snap_max / 2, 50.0))
    out = np.full(len(xy), -1, dtype=np.int64)
    for k, (x, y) in enumerate(xy.tolist()):
        hit = index.nearest_within(x, y, snap_max)
        if hit is not None:
            out[k] = hit[0]
    return out


def nearest_destination_field(g: PedestrianGraph, pois: PoiSet, snap_max: float,
                              cutoff: float) -> NodeDistanceField:
    """One multi-source search from every snapped destination of a class.

    Destinations snap to their nearest node; the snap distance itself is
    not added, so a node hosting a destination has distance 0.
    """
    snapped = snap_to_nodes(g, pois.xy, snap_max)
    sources = sorted(set(snapped[snapped >= 0].tolist()))
    dist = np.zeros(g.n_nodes)
    reached = np.zeros(g.n_nodes, dtype=bool)
    if sources:
        done = _dijkstra(_adjacency(g), sources, cutoff)
        idx = np.fromiter(done.keys(), dtype=np.int64, count=len(done))
        dist[idx] = np.fromiter(done.values(), dtype=float, count=len(done))
        reached[idx] = True
    diag = {"destinations": len(pois), "snapped": int((snapped >= 0).sum()),
            "dropped_beyond_snap": int((snapped < 0).sum()), "source_nodes": len(sources)}
    return NodeDistanceField(pois.cls, cutoff, dist, reached, diag)


def _catchment_chunk(args):
    adj, node_hex, nodes, cutoff = args
    out = []
    for n in nodes:
        done = _dijkstra(adj, [n], cutoff)
        hexes = {node_hex[m] for m in done}
        hexes.add(node_hex[n])
        out.append(np.array(sorted(hexes), dtype=np.int64))
    return out


def node_catchments(g: PedestrianGraph, node_hex: np.ndarray, cutoff: float,
                    nodes: Sequence[int] | None = None, threads: int = 1) -> list[np.ndarray]:
    """Hex ids reachable from each node within ``cutoff``, always including its own.

    ``nodes`` (node indices) restricts the work to the nodes that are needed;
    the result is aligned with it. Searches are independent, so ``threads``
    > 1 splits them into contiguous ranges over a process pool.
    """
    nodes = list(range(g.n_nodes)) if nodes is None else [int(n) for n in nodes]
    node_hex = [int(h) for h in np.asarray(node_hex).tolist()]
    adj = _adjacency(g)
    if threads <= 1 or len(nodes) < 2 * threads:
        return _catchment_chunk((adj, node_hex, nodes, cutoff))
    bounds = np.linspace(0, len(nodes), threads + 1).astype(int)
    jobs = [(adj, node_hex, nodes[a:b], cutoff) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_catchment_chunk, jobs))
    return [c for part in parts for c in part]


def node_local_density(catchments: Sequence[np.ndarray], pop_density: np.ndarray,
                       intersection_density: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted mean of member-hex densities for every catchment."""
    pop_density = np.asarray(pop_density, dtype=float)
    intersection_density = np.asarray(intersection_density, dtype=float)
    n = len(pop_density)
    pop = np.empty(len(catchments))
    inter = np.empty(len(catchments))
    for k, c in enumerate(catchments):
        c = np.asarray(c, dtype=np.int64)
        if len(c) == 0:
            raise NetworkError("empty catchment")
        if c.min() < 0 or c.max() >= n:
            raise NetworkError(f"catchment references unknown hex id {int(c.max()) if c.max() >= n else int(c.min())}")
        pop[k] = pop_density[c].mean()
        inter[k] = intersection_density[c].mean()
    return pop, inter
