"""Flat-top regular hexagon tessellation.

Cells are addressed by (col, row) offset coordinates in an "even-q"
layout: odd columns are shifted up by half a cell height. The cell size is
given as the long (vertex-to-vertex) diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError

SQRT3 = math.sqrt(3.0)


def hex_area_m2(diagonal: float) -> float:
    return 3 * SQRT3 / 8 * diagonal**2


@dataclass
class HexCell:
    id: int
    col: int
    row: int
    center: tuple[float, float]
    vertices: np.ndarray
    area_km2: float
    population: float = 0.0
    intersection_count: int = 0

    @property
    def pop_density(self) -> float:
        return self.population / self.area_km2

    @property
    def intersection_density(self) -> float:
        return self.intersection_count / self.area_km2


class HexGrid:
    """A finite set of tessellation cells plus an O(1) point locator."""

    def __init__(self, origin: tuple[float, float], diagonal: float, cells: list[HexCell]):
        self.origin = origin
        self.diagonal = float(diagonal)
        self.radius = self.diagonal / 2
        self.cells = cells
        self._by_colrow = {(c.col, c.row): c.id for c in cells}

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __getitem__(self, i: int) -> HexCell:
        return self.cells[i]

    def colrow(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Offset coordinates of the cell containing each point."""
        return point_to_colrow(x, y, self.origin, self.radius)

    def locate(self, x, y) -> np.ndarray:
        """Cell id containing each point, -1 where the cell is not in the grid."""
        col, row = self.colrow(x, y)
        lookup = self._by_colrow
        return np.fromiter((lookup.get((c, r), -1) for c, r in zip(col.tolist(), row.tolist())),
                           dtype=np.int64, count=len(col))

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.cells], dtype=float).reshape(-1, 2)

    def populations(self) -> np.ndarray:
        return np.array([c.population for c in self.cells], dtype=float)

    def pop_density(self) -> np.ndarray:
        return np.array([c.pop_density for c in self.cells], dtype=float)

    def intersection_density(self) -> np.ndarray:
        return np.array([c.intersection_density for c in self.cells], dtype=float)


def cell_center(col: int, row: int, origin, radius: float) -> tuple[float, float]:
    x = origin[0] + 1.5 * radius * col
    y = origin[1] + SQRT3 * radius * (row + 0.5 * (col & 1))
    return x, y


def cell_vertices(center, radius: float) -> np.ndarray:
    ang = np.radians(np.arange(6) * 60.0)
    return np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])


def point_to_colrow(x, y, origin, radius: float):
    x = np.atleast_1d(np.asarray(x, dtype=float)) - origin[0]
    y = np.atleast_1d(np.asarray(y, dtype=float)) - origin[1]
    # fractional axial -> cube coordinates, then cube rounding
    q = (2.0 / 3.0) * x / radius
    r = (-x / 3.0 + SQRT3 / 3.0 * y) / radius
    s = -q - r
    rq, rr, rs = np.round(q), np.round(r), np.round(s)
    dq, dr, ds = np.abs(rq - q), np.abs(rr - r), np.abs(rs - s)
    fix_q = (dq > dr) & (dq > ds)
    fix_r = ~fix_q & (dr > ds)
    rq = np.where(fix_q, -rr - rs, rq)
    rr = np.where(fix_r, -rq - rs, rr)
    col = rq.astype(np.int64)
    row = (rr + (col - (col & 1)) // 2).astype(np.int64)
    return col, row


def _overlaps_rect(verts: np.ndarray, bbox, eps: float) -> bool:
    xmin, ymin, xmax, ymax = bbox
    if verts[:, 0].max() <= xmin + eps or verts[:, 0].min() >= xmax - eps:
        return False
    if verts[:, 1].max() <= ymin + eps or verts[:, 1].min() >= ymax - eps:
        return False
    # separating axes from the hexagon's edge normals
    rect = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
    nxt = np.roll(verts, -1, axis=0)
    for a, b in zip(verts, nxt):
        nrm = np.array([b[1] - a[1], a[0] - b[0]])
        ph = verts @ nrm
        pr = rect @ nrm
        scale = np.linalg.norm(nrm)
        if ph.max() <= pr.min() + eps * scale or pr.max() <= ph.min() + eps * scale:
            return False
    return True


def hex_tessellate(bbox, diagonal: float, origin=None) -> HexGrid:
    """Tile a rectangle ``(xmin, ymin, xmax, ymax)`` with flat-top hexagons.

    Only cells overlapping the rectangle with positive area are kept. Ids
    are assigned row-major: by row, then by column.
    """
    xmin, ymin, xmax, ymax = map(float, bbox)
    if not (xmax > xmin and ymax > ymin):
        raise GeometryError("degenerate bounding box")
    if diagonal <= 0:
        raise GeometryError("non-positive length: hex diagonal")
    radius = diagonal / 2
    if origin is None:
        origin = (xmin, ymin)
    dx, dy = 1.5 * radius, SQRT3 * radius
    c0 = math.floor((xmin - origin[0]) / dx) - 1
    c1 = math.ceil((xmax - origin[0]) / dx) + 1
    r0 = math.floor((ymin - origin[1]) / dy) - 2
    r1 = math.ceil((ymax - origin[1]) / dy) + 1
    eps = 1e-9 * diagonal
    area_km2 = hex_area_m2(diagonal) * 1e-6
    found = []
    for row in range(r0, r1 + 1):
        for col in range(c0, c1 + 1):
            center = cell_center(col, row, origin, radius)
            verts = cell_vertices(center, radius)
            if _overlaps_rect(verts, (xmin, ymin, xmax, ymax), eps):
                found.append((row, col, center, verts))
    cells = [HexCell(i, col, row, center, verts, area_km2)
             for i, (row, col, center, verts) in enumerate(found)]
    return HexGrid(origin, diagonal, cells)


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by a convex CCW polygon (open rings)."""
    out = [tuple(p) for p in subject]
    m = len(clip)
    for i in range(m):
        a, b = clip[i], clip[(i + 1) % m]
        inp, out = out, []
        if not inp:
            break

        def inside(p):
            return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0

        def cross(p, q):
            x1, y1, x2, y2 = p[0], p[1], q[0], q[1]
            den = (x1 - x2) * (a[1] - b[1]) - (y1 - y2) * (a[0] - b[0])
            t = ((x1 - a[0]) * (a[1] - b[1]) - (y1 - a[1]) * (a[0] - b[0])) / den
            return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))

        prev = inp[-1]
        for cur in inp:
            if inside(cur):
                if not inside(prev):
                    out.append(cross(prev, cur))
                out.append(cur)
            elif inside(prev):
                out.append(cross(prev, cur))
            prev = cur
    return np.array(out, dtype=float).reshape(-1, 2)


def convex_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two convex polygons (open rings, any orientation) share interior area."""
    for poly in (a, b):
        nxt = np.roll(poly, -1, axis=0)
        for p, q in zip(poly, nxt):
            nrm = np.array([q[1] - p[1], p[0] - q[0]])
            pa, pb = a @ nrm, b @ nrm
            if pa.max() <= pb.min() or pb.max() <= pa.min():
                return False
    return True
