"""Planar polygons and the predicates the pipeline needs on them.

Everything here works in projected metres. Point predicates are vectorised
over numpy arrays because they run against every node and raster cell of a
region.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon as _ShapelyPolygon

from ..errors import GeometryError


def _close_ring(coords) -> np.ndarray:
    ring = np.asarray(coords, dtype=float)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise GeometryError("ring must be an (n, 2) coordinate array")
    if len(ring) and not np.array_equal(ring[0], ring[-1]):
        ring = np.vstack([ring, ring[:1]])
    if len(ring) < 4:
        raise GeometryError("ring needs at least 4 vertices (closed)")
    if not np.all(np.isfinite(ring)):
        raise GeometryError("ring has non-finite coordinates")
    return ring


def ring_signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple polygon with optional holes.

    Rings are closed on construction; the exterior is oriented
    counter-clockwise and holes clockwise.
    """

    exterior: np.ndarray
    holes: tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ext = _close_ring(self.exterior)
        if ring_signed_area(ext) < 0:
            ext = ext[::-1].copy()
        holes = []
        for h in self.holes:
            h = _close_ring(h)
            if ring_signed_area(h) > 0:
                h = h[::-1].copy()
            holes.append(h)
        object.__setattr__(self, "exterior", ext)
        object.__setattr__(self, "holes", tuple(holes))

    @property
    def rings(self) -> tuple[np.ndarray, ...]:
        return (self.exterior, *self.holes)

    @property
    def area(self) -> float:
        return ring_signed_area(self.exterior) + sum(ring_signed_area(h) for h in self.holes)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        e = self.exterior
        return float(e[:, 0].min()), float(e[:, 1].min()), float(e[:, 0].max()), float(e[:, 1].max())

    def centroid(self) -> tuple[float, float]:
        return ring_centroid(self.exterior)

    def to_shapely(self) -> _ShapelyPolygon:
        return _ShapelyPolygon(self.exterior, [h for h in self.holes])

    @classmethod
    def from_shapely(cls, geom) -> "Polygon":
        return cls(np.asarray(geom.exterior.coords)[:, :2],
                   tuple(np.asarray(r.coords)[:, :2] for r in geom.interiors))

    def is_valid(self) -> bool:
        return bool(self.to_shapely().is_valid)


def ring_centroid(ring: np.ndarray) -> tuple[float, float]:
    """Area-weighted centroid of a closed ring.

    Degenerate (zero-area) rings fall back to the vertex mean.
    """
    ring = np.asarray(ring, dtype=float)
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        closed = ring
    else:
        closed = np.vstack([ring, ring[:1]])
    # shift to the first vertex to keep the cross products well conditioned
    ox, oy = closed[0]
    x, y = closed[:, 0] - ox, closed[:, 1] - oy
    cross = x[:-1] * y[1:] - x[1:] * y[:-1]
    a = cross.sum() / 2.0
    if abs(a) < 1e-12:
        pts = closed[:-1]
        return float(pts[:, 0].mean()), float(pts[:, 1].mean())
    cx = ((x[:-1] + x[1:]) * cross).sum() / (6 * a)
    cy = ((y[:-1] + y[1:]) * cross).sum() / (6 * a)
    return float(cx + ox), float(cy + oy)


def _as_polygons(region) -> list[Polygon]:
    if isinstance(region, Polygon):
        return [region]
    return list(region)


def _segments(polygons: Iterable[Polygon]) -> np.ndarray:
    segs = [np.hstack([r[:-1], r[1:]]) for p in polygons for r in p.rings]
    if not segs:
        return np.empty((0, 4))
    return np.vstack(segs)


def points_on_segments(px, py, segs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Mask of points lying on any of the segments (within ``tol`` metres)."""
    return segment_distance(px, py, segs) <= tol


def segment_distance(px, py, segs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Minimum distance from each point to a set of segments ``(x1, y1, x2, y2)``."""
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    out = np.full(px.shape, np.inf)
    if len(segs) == 0:
        return out
    x1, y1, x2, y2 = (segs[:, i] for i in range(4))
    dx, dy = x2 - x1, y2 - y1
    ll = dx * dx + dy * dy
    safe = np.where(ll > 0, ll, 1.0)
    # bound the temporary (points x segments) matrices
    step = max(1, chunk * 256 // max(len(segs), 1))
    for s in range(0, len(px), step):
        qx = px[s:s + step, None]
        qy = py[s:s + step, None]
        t = ((qx - x1) * dx + (qy - y1) * dy) / safe
        t = np.clip(np.where(ll > 0, t, 0.0), 0.0, 1.0)
        cx = x1 + t * dx - qx
        cy = y1 + t * dy - qy
        out[s:s + step] = np.sqrt(np.min(cx * cx + cy * cy, axis=1))
    return out


def points_in_polygon(px, py, region) -> np.ndarray:
    """Even-odd containment over all rings; boundary points count as inside."""
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    inside = np.zeros(px.shape, dtype=bool)
    polys = _as_polygons(region)
    for poly in polys:
        xmin, ymin, xmax, ymax = poly.bounds
        cand = (px >= xmin) & (px <= xmax) & (py >= ymin) & (py <= ymax)
        if not cand.any():
            continue
        qx, qy = px[cand], py[cand]
        odd = np.zeros(qx.shape, dtype=bool)
        for ring in poly.rings:
            x1, y1 = ring[:-1, 0], ring[:-1, 1]
            x2, y2 = ring[1:, 0], ring[1:, 1]
            for a, b, c, d in zip(x1, y1, x2, y2):
                crosses = (b > qy) != (d > qy)
                if not crosses.any():
                    continue
                with np.errstate(divide="ignore", invalid="ignore"):
                    xint = a + (qy - b) * (c - a) / (d - b)
                odd ^= crosses & (qx < xint)
        inside[cand] |= odd
    if (~inside).any():
        rest = ~inside
        on_edge = points_on_segments(px[rest], py[rest], _segments(polys))
        inside[np.flatnonzero(rest)[on_edge]] = True
    return inside


def distance_to_boundary(px, py, region) -> np.ndarray:
    return segment_distance(px, py, _segments(_as_polygons(region)))


def in_buffered_region(px, py, region, buffer: float) -> np.ndarray | bool:
    """True where a point is inside ``region`` or within ``buffer`` of its boundary.

    Scalar inputs give a scalar bool.
    """
    if buffer < 0:
        raise GeometryError("buffer must be non-negative")
    scalar = np.ndim(px) == 0
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    res = points_in_polygon(px, py, region)
    rest = ~res
    if rest.any() and buffer > 0:
        polys = _as_polygons(region)
        # cheap bbox rejection before exact segment distances
        keep = np.zeros(rest.sum(), dtype=bool)
        qx, qy = px[rest], py[rest]
        for p in polys:
            xmin, ymin, xmax, ymax = p.bounds
            keep |= (qx >= xmin - buffer) & (qx <= xmax + buffer) & (qy >= ymin - buffer) & (qy <= ymax + buffer)
        idx = np.flatnonzero(rest)[keep]
        if len(idx):
            res[idx] = distance_to_boundary(px[idx], py[idx], polys) <= buffer
    return bool(res[0]) if scalar else res


def region_bounds(region, buffer: float = 0.0) -> tuple[float, float, float, float]:
    b = np.array([p.bounds for p in _as_polygons(region)])
    return (float(b[:, 0].min() - buffer), float(b[:, 1].min() - buffer),
            float(b[:, 2].max() + buffer), float(b[:, 3].max() + buffer))


def region_area(region) -> float:
    return float(sum(p.area for p in _as_polygons(region)))


def polygon_intersection(a, b) -> list[Polygon]:
    """Polygon pieces whose union is ``a`` intersected with ``b``.

    Multi-part inputs are clipped pairwise and the pieces unioned. An empty
    intersection is an empty list.
    """
    pa = _as_polygons(a)
    pb = _as_polygons(b)
    for p in pa + pb:
        if not p.is_valid():
            raise GeometryError("invalid polygon ring (self-intersecting or degenerate)")
    ga = shapely.union_all([p.to_shapely() for p in pa])
    gb = shapely.union_all([p.to_shapely() for p in pb])
    inter = ga.intersection(gb)
    parts = []
    for g in getattr(inter, "geoms", [inter]):
        if g.geom_type == "Polygon" and not g.is_empty and g.area > 0:
            parts.append(Polygon.from_shapely(g))
    parts.sort(key=lambda p: (p.bounds[1], p.bounds[0]))
    return parts


def polyline_length(coords: np.ndarray) -> float:
    d = np.diff(np.asarray(coords, dtype=float), axis=0)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def interpolate_along(coords: np.ndarray, offsets: Sequence[float]) -> np.ndarray:
    """Points at the given arc-length offsets along a polyline."""
    coords = np.asarray(coords, dtype=float)
    seg = np.hypot(*np.diff(coords, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    offs = np.asarray(offsets, dtype=float)
    x = np.interp(offs, cum, coords[:, 0])
    y = np.interp(offs, cum, coords[:, 1])
    return np.column_stack([x, y])
