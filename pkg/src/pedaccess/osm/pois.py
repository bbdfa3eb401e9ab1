"""Destination points of interest classified by OSM key-value queries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..geometry.projection import Zone, project
from ..geometry.shapes import in_buffered_region, ring_centroid
from .parse import NODE, RELATION, WAY, OsmElement

Query = Sequence[tuple[str, str]]


@dataclass
class PoiSet:
    """Destinations of one class. ``ids`` look like ``n123``, ``w45``, ``r6`` or ``gtfs:stop``."""

    cls: str
    ids: list[str] = field(default_factory=list)
    xy: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    tags: list[dict[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ids)

    def append(self, pid: str, x: float, y: float, tags: dict[str, str]):
        self.ids.append(pid)
        self.xy = np.vstack([self.xy, [[x, y]]])
        self.tags.append(tags)


def matches(tags: Mapping[str, str], query: Query) -> bool:
    """True if any ``(key, value)`` pair of the query is satisfied; value ``*`` matches any."""
    for k, v in query:
        have = tags.get(k)
        if have is not None and (v == "*" or have == v):
            return True
    return False


def _line_centroid(pts: np.ndarray) -> tuple[float, float]:
    seg = np.hypot(*np.diff(pts, axis=0).T)
    if seg.sum() == 0:
        return float(pts[0, 0]), float(pts[0, 1])
    mids = (pts[:-1] + pts[1:]) / 2
    c = (mids * seg[:, None]).sum(axis=0) / seg.sum()
    return float(c[0]), float(c[1])


def _stitch_rings(parts: list[list[int]]) -> list[list[int]]:
    """Join open way node lists end to end into closed rings where possible."""
    rings, open_parts = [], []
    for p in parts:
        (rings if len(p) >= 4 and p[0] == p[-1] else open_parts).append(list(p))
    while open_parts:
        cur = open_parts.pop(0)
        progress = True
        while cur[0] != cur[-1] and progress:
            progress = False
            for i, p in enumerate(open_parts):
                if p[0] == cur[-1]:
                    cur += p[1:]
                elif p[-1] == cur[-1]:
                    cur += p[::-1][1:]
                elif p[-1] == cur[0]:
                    cur = p[:-1] + cur
                elif p[0] == cur[0]:
                    cur = p[::-1][:-1] + cur
                else:
                    continue
                open_parts.pop(i)
                progress = True
                break
        if len(cur) >= 4 and cur[0] == cur[-1]:
            rings.append(cur)
    return rings


def extract_pois(elements: Iterable[OsmElement], queries: Mapping[str, Query], region, buffer: float,
                 zone: Zone) -> dict[str, PoiSet]:
    """Classify OSM features into destination classes.

    Nodes become points directly; closed ways use their area centroid, open
    ways their length-weighted centroid, and ``multipolygon`` relations the
    area-weighted centroid of their outer rings. A feature matching several
    classes appears once in each. Points outside the buffered region are
    discarded.
    """
    found: dict[str, dict[str, tuple[float, float, dict]]] = {c: {} for c in sorted(queries)}
    node_ll: dict[int, tuple[float, float]] = {}
    way_refs: dict[int, tuple[int, ...]] = {}

    def classify(pid, tags, xy_fn):
        hits = [c for c, q in queries.items() if matches(tags, q)]
        if not hits:
            return
        xy = xy_fn()
        if xy is None:
            return
        for c in hits:
            found[c].setdefault(pid, (xy[0], xy[1], dict(tags)))

    def proj(latlon):
        arr = np.asarray(latlon, dtype=float).reshape(-1, 2)
        x, y = project(arr[:, 0], arr[:, 1], zone)
        return np.column_stack([np.atleast_1d(x), np.atleast_1d(y)])

    for el in elements:
        if el.kind == NODE:
            node_ll[el.id] = (el.lat, el.lon)
            if el.tags:
                classify(f"n{el.id}", el.tags,
                         lambda el=el: tuple(proj([(el.lat, el.lon)])[0]))
        elif el.kind == WAY:
            way_refs[el.id] = el.refs
            if el.tags:
                def way_xy(el=el):
                    pts = proj(el.coords)
                    return ring_centroid(pts) if el.is_closed else _line_centroid(pts)
                classify(f"w{el.id}", el.tags, way_xy)
        elif el.kind == RELATION and el.tags.get("type") == "multipolygon":
            def rel_xy(el=el):
                outers = [way_refs[m] for t, m, role in el.members
                          if t == WAY and role in ("outer", "") and m in way_refs]
                rings = _stitch_rings(outers)
                if not rings:
                    return None
                cx = cy = total = 0.0
                for ring in rings:
                    if any(r not in node_ll for r in ring):
                        continue
                    pts = proj([node_ll[r] for r in ring])
                    x0, y0 = pts[0]
                    dx, dy = pts[:, 0] - x0, pts[:, 1] - y0
                    a = abs(0.5 * np.sum(dx[:-1] * dy[1:] - dx[1:] * dy[:-1]))
                    c = ring_centroid(pts)
                    cx, cy, total = cx + a * c[0], cy + a * c[1], total + a
                if total == 0:
                    return None
                return cx / total, cy / total
            classify(f"r{el.id}", el.tags, rel_xy)

    out = {}
    for c, pts in found.items():
        pids = sorted(pts)
        ps = PoiSet(c)
        if pids:
            xy = np.array([[pts[p][0], pts[p][1]] for p in pids], dtype=float)
            keep = in_buffered_region(xy[:, 0], xy[:, 1], region, buffer)
            ps.ids = [p for p, k in zip(pids, keep) if k]
            ps.xy = xy[keep]
            ps.tags = [pts[p][2] for p, k in zip(pids, keep) if k]
        out[c] = ps
    return out
