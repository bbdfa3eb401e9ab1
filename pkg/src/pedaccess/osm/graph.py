"""Pedestrian street network derived from OSM ways."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..errors import NetworkError
from ..geometry.projection import Zone, project
from ..geometry.shapes import in_buffered_region
from .parse import WAY, OsmElement

EXCLUDED_HIGHWAYS = frozenset({"motorway", "motorway_link"})
MIN_STUB_M = 1.0


def is_walkable(tags: dict[str, str]) -> bool:
    """The pedestrian filter: any highway except motorways, foot=no or access=private."""
    hw = tags.get("highway")
    if hw is None or hw in EXCLUDED_HIGHWAYS:
        return False
    if tags.get("foot") == "no" or tags.get("access") == "private":
        return False
    return True


@dataclass
class PedestrianGraph:
    """Undirected multigraph of street segments in projected metres.

    Nodes are stored in ascending OSM id order; ``u``/``v`` index into the
    node arrays. ``polylines[k]`` runs from node ``u[k]`` to node ``v[k]``.
    """

    node_ids: np.ndarray
    xy: np.ndarray
    u: np.ndarray
    v: np.ndarray
    length: np.ndarray
    polylines: list[np.ndarray]
    way_ids: np.ndarray
    zone: Zone | None = None
    diagnostics: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {int(n): i for i, n in enumerate(self.node_ids.tolist())}
        self._csr = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.u)

    def index_of(self, node_id: int) -> int:
        return self._index[int(node_id)]

    def has_node(self, node_id: int) -> bool:
        return int(node_id) in self._index

    @property
    def total_length(self) -> float:
        return float(self.length.sum())

    def degree(self) -> np.ndarray:
        """Edge-end count per node; a self-loop contributes two."""
        deg = np.bincount(self.u, minlength=self.n_nodes) + np.bincount(self.v, minlength=self.n_nodes)
        return deg

    def csr(self):
        """Symmetric adjacency ``(indptr, indices, weights)`` with parallel edges collapsed to the shortest."""
        if self._csr is None:
            self._csr = build_csr(self.n_nodes, self.u, self.v, self.length)
        return self._csr

    @classmethod
    def from_edges(cls, node_ids, xy, edges, zone=None) -> "PedestrianGraph":
        """Build from ``(u_id, v_id, polyline)`` triples; used by fixtures and the synthetic city."""
        node_ids = np.asarray(node_ids, dtype=np.int64)
        order = np.argsort(node_ids, kind="stable")
        node_ids = node_ids[order]
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)[order]
        index = {int(n): i for i, n in enumerate(node_ids.tolist())}
        u, v, lengths, polys = [], [], [], []
        for a, b, line in edges:
            line = np.asarray(line, dtype=float)
            u.append(index[int(a)])
            v.append(index[int(b)])
            d = np.diff(line, axis=0)
            lengths.append(float(np.hypot(d[:, 0], d[:, 1]).sum()))
            polys.append(line)
        return cls(node_ids, xy, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64),
                   np.array(lengths, dtype=float), polys, np.full(len(u), -1, dtype=np.int64), zone)


def build_csr(n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray):
    best: dict[tuple[int, int], float] = {}
    for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()):
        if a == b:
            continue
        key = (a, b) if a < b else (b, a)
        if c < best.get(key, np.inf):
            best[key] = c
    if best:
        keys = np.array(list(best.keys()), dtype=np.int64)
        ws = np.array(list(best.values()), dtype=float)
        src = np.concatenate([keys[:, 0], keys[:, 1]])
        dst = np.concatenate([keys[:, 1], keys[:, 0]])
        wt = np.concatenate([ws, ws])
    else:
        src = dst = np.empty(0, dtype=np.int64)
        wt = np.empty(0)
    order = np.lexsort((dst, src))
    src, dst, wt = src[order], dst[order], wt[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, dst, wt


def _runs(refs, inside) -> list[tuple[int, int]]:
    """Maximal index ranges [i, j] of consecutive inside nodes, length >= 2."""
    out = []
    start = None
    for i, ok in enumerate(inside):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - 1 > start:
                out.append((start, i - 1))
            start = None
    if start is not None and len(refs) - 1 > start:
        out.append((start, len(refs) - 1))
    return out


def build_pedestrian_graph(elements: Iterable[OsmElement], region, buffer: float, zone: Zone) -> PedestrianGraph:
    """Derive the walkable network inside ``region`` grown by ``buffer`` metres.

    Ways are filtered with :func:`is_walkable`, clipped to the buffered region
    segment by segment, then split wherever they share a node with another
    way so that edges meet only at graph nodes.
    """
    ways = [el for el in elements if el.kind == WAY and is_walkable(el.tags)]
    ways.sort(key=lambda w: w.id)
    diag = {"walkable_ways": len(ways), "clipped_stubs_dropped": 0, "zero_length_edges_dropped": 0}

    coord_of: dict[int, tuple[float, float]] = {}
    for w in ways:
        for r, c in zip(w.refs, w.coords):
            coord_of[r] = c
    if not coord_of:
        raise NetworkError("no pedestrian network in region")
    ids = np.fromiter(coord_of.keys(), dtype=np.int64, count=len(coord_of))
    latlon = np.array(list(coord_of.values()), dtype=float)
    x, y = project(latlon[:, 0], latlon[:, 1], zone)
    x, y = np.atleast_1d(x), np.atleast_1d(y)
    ok = in_buffered_region(x, y, region, buffer)
    pos = {int(n): i for i, n in enumerate(ids.tolist())}

    runs = []
    for w in ways:
        inside = [bool(ok[pos[r]]) for r in w.refs]
        for i, j in _runs(w.refs, inside):
            seg = w.refs[i:j + 1]
            pts = np.array([(x[pos[r]], y[pos[r]]) for r in seg])
            clipped = i > 0 or j < len(w.refs) - 1
            if clipped and np.hypot(*np.diff(pts, axis=0).T).sum() < MIN_STUB_M:
                diag["clipped_stubs_dropped"] += 1
                continue
            runs.append((w.id, seg, pts))

    uses = Counter()
    endpoints = set()
    for _, seg, _ in runs:
        uses.update(seg)
        endpoints.add(seg[0])
        endpoints.add(seg[-1])
    graph_nodes = endpoints | {n for n, c in uses.items() if c > 1}

    edges = []
    for wid, seg, pts in runs:
        start = 0
        for k in range(1, len(seg)):
            if seg[k] in graph_nodes:
                line = pts[start:k + 1]
                length = float(np.hypot(*np.diff(line, axis=0).T).sum())
                if length > 0:
                    edges.append((seg[start], seg[k], line, length, wid))
                else:
                    diag["zero_length_edges_dropped"] += 1
                start = k
    if not edges:
        raise NetworkError("no pedestrian network in region")

    used = sorted({e[0] for e in edges} | {e[1] for e in edges})
    node_ids = np.array(used, dtype=np.int64)
    idx = {n: i for i, n in enumerate(used)}
    xy = np.array([(x[pos[n]], y[pos[n]]) for n in used], dtype=float)
    g = PedestrianGraph(
        node_ids=node_ids,
        xy=xy,
        u=np.array([idx[e[0]] for e in edges], dtype=np.int64),
        v=np.array([idx[e[1]] for e in edges], dtype=np.int64),
        length=np.array([e[3] for e in edges], dtype=float),
        polylines=[e[2] for e in edges],
        way_ids=np.array([e[4] for e in edges], dtype=np.int64),
        zone=zone,
        diagnostics=diag,
    )
    return g
