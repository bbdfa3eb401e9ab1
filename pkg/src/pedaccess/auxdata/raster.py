"""ESRI ASCII grid population rasters and zonal population estimates."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..geometry.hexgrid import HexCell, HexGrid, convex_overlap
from ..geometry.projection import Zone, project
from ..geometry.shapes import Polygon, points_in_polygon, region_bounds

_REQUIRED = ("ncols", "nrows", "cellsize")


@dataclass
class PopulationRaster:
    """Population counts per cell; row 0 is the northernmost row.

    ``crs`` is ``"projected"`` when coordinates are already in the region's
    UTM frame, or ``"wgs84"`` when x/y are lon/lat degrees.
    """

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    values: np.ndarray
    nodata: float | None = None
    crs: str = "projected"
    diagnostics: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.ncols <= 0 or self.nrows <= 0 or self.cellsize <= 0:
            raise DataError("raster dimensions and cellsize must be positive")
        if self.values.shape != (self.nrows, self.ncols):
            raise DataError("raster values do not match ncols/nrows")
        self._nodata_mask = np.zeros(self.values.shape, bool)
        if self.nodata is not None:
            self._nodata_mask = self.values == self.nodata
        self.diagnostics.setdefault("nodata_cells", int(self._nodata_mask.sum()))
        vals = np.where(self._nodata_mask, 0.0, self.values.astype(float))
        if (vals < 0).any():
            raise DataError("raster contains negative population values")
        self.persons = vals

    def value_at(self, x: float, y: float) -> float:
        """Population of the cell containing native coordinate ``(x, y)``; nodata reads as 0."""
        col = int(np.floor((x - self.xllcorner) / self.cellsize))
        row = self.nrows - 1 - int(np.floor((y - self.yllcorner) / self.cellsize))
        if not (0 <= col < self.ncols and 0 <= row < self.nrows):
            raise DataError(f"coordinate ({x}, {y}) is outside the raster")
        return float(self.persons[row, col])

    def native_centers(self) -> tuple[np.ndarray, np.ndarray]:
        cols = np.arange(self.ncols)
        rows = np.arange(self.nrows)
        cx = self.xllcorner + (cols + 0.5) * self.cellsize
        cy = self.yllcorner + (self.nrows - rows - 0.5) * self.cellsize
        gx, gy = np.meshgrid(cx, cy)
        return gx, gy

    def cells(self, zone: Zone | None = None, bounds=None):
        """Cell centers in the projected frame with their populations.

        Returns ``(x, y, persons, row, col)`` flattened; ``bounds`` (projected
        ``xmin, ymin, xmax, ymax``) limits the result to nearby cells.
        """
        gx, gy = self.native_centers()
        if self.crs == "wgs84":
            if zone is None:
                raise DataError("a projection zone is required for a geographic raster")
            gx, gy = project(gy, gx, zone)
        rows, cols = np.indices(self.values.shape)
        x, y, p = gx.ravel(), gy.ravel(), self.persons.ravel()
        r, c = rows.ravel(), cols.ravel()
        if bounds is not None:
            xmin, ymin, xmax, ymax = bounds
            keep = (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)
            x, y, p, r, c = x[keep], y[keep], p[keep], r[keep], c[keep]
        return x, y, p, r, c

    def cell_footprint(self, row: int, col: int, zone: Zone | None = None) -> np.ndarray:
        x0 = self.xllcorner + col * self.cellsize
        y0 = self.yllcorner + (self.nrows - row - 1) * self.cellsize
        s = self.cellsize
        corners = np.array([[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]])
        if self.crs == "wgs84":
            px, py = project(corners[:, 1], corners[:, 0], zone)
            corners = np.column_stack([px, py])
        return corners


def read_raster(path, crs: str = "projected") -> PopulationRaster:
    """Read an ESRI ASCII grid (``.asc``)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"raster not found: {path}")
    header: dict[str, float] = {}
    with open(path) as fh:
        lines = fh.readlines()
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        key = parts[0].lower()
        if key[0].isalpha():
            if len(parts) != 2:
                raise DataError(f"malformed raster header line: {lines[i].strip()!r}")
            try:
                header[key] = float(parts[1])
            except ValueError as exc:
                raise DataError(f"malformed raster header value: {lines[i].strip()!r}") from exc
            i += 1
        else:
            break
    for k in _REQUIRED:
        if k not in header:
            raise DataError(f"raster header missing {k}")
    ncols, nrows, cs = int(header["ncols"]), int(header["nrows"]), header["cellsize"]
    if "xllcorner" in header:
        xll = header["xllcorner"]
    elif "xllcenter" in header:
        xll = header["xllcenter"] - cs / 2
    else:
        raise DataError("raster header missing xllcorner")
    if "yllcorner" in header:
        yll = header["yllcorner"]
    elif "yllcenter" in header:
        yll = header["yllcenter"] - cs / 2
    else:
        raise DataError("raster header missing yllcorner")
    nodata = header.get("nodata_value")
    rows = []
    for line in lines[i:]:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != ncols:
            raise DataError(f"raster row has {len(parts)} values, expected {ncols}")
        rows.append([float(v) for v in parts])
    if len(rows) != nrows:
        raise DataError(f"raster has {len(rows)} rows, expected {nrows}")
    return PopulationRaster(ncols, nrows, xll, yll, cs, np.array(rows), nodata, crs)


def write_raster(path, raster: PopulationRaster) -> None:
    with open(path, "w") as fh:
        fh.write(f"ncols {raster.ncols}\nnrows {raster.nrows}\n")
        fh.write(f"xllcorner {raster.xllcorner!r}\nyllcorner {raster.yllcorner!r}\n")
        fh.write(f"cellsize {raster.cellsize!r}\n")
        if raster.nodata is not None:
            fh.write(f"NODATA_value {raster.nodata!r}\n")
        for row in raster.values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def hex_population(raster: PopulationRaster, cell: HexCell, zone: Zone | None = None) -> float:
    """Mean population of raster cells whose centers fall inside the hexagon.

    Hexagons smaller than a raster cell may contain no center; those take
    the mean of the raster cells overlapping the hexagon instead.
    """
    verts = np.asarray(cell.vertices)
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    x, y, p, r, c = raster.cells(zone, (xmin, ymin, xmax, ymax))
    ring = np.vstack([verts, verts[:1]])
    inside = points_in_polygon(x, y, Polygon(ring))
    if inside.any():
        return float(p[inside].mean())
    return _overlap_mean(raster, verts, zone)


def _overlap_mean(raster, verts, zone) -> float:
    pad = raster.cellsize if raster.crs == "projected" else 0.0
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    if raster.crs == "projected":
        x, y, p, r, c = raster.cells(zone, (xmin - pad, ymin - pad, xmax + pad, ymax + pad))
    else:
        x, y, p, r, c = raster.cells(zone)
        near = (np.abs(x - (xmin + xmax) / 2) < (xmax - xmin) + 1e4) & (np.abs(y - (ymin + ymax) / 2) < (ymax - ymin) + 1e4)
        x, y, p, r, c = x[near], y[near], p[near], r[near], c[near]
    vals = [pp for pp, rr, cc in zip(p, r, c) if convex_overlap(raster.cell_footprint(rr, cc, zone), verts)]
    return float(np.mean(vals)) if vals else 0.0


def hex_populations(raster: PopulationRaster, grid: HexGrid, zone: Zone | None = None) -> np.ndarray:
    """Population estimate for every cell of ``grid``.

    Raster centers are assigned to the single hexagon that contains them,
    so the estimate partitions the raster; cells left without a center use
    the overlap fallback of :func:`hex_population`.
    """
    out = np.zeros(len(grid))
    if len(grid) == 0:
        return out
    verts = np.vstack([c.vertices for c in grid])
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    x, y, p, _, _ = raster.cells(zone, (xmin, ymin, xmax, ymax))
    ids = grid.locate(x, y)
    ok = ids >= 0
    sums = np.bincount(ids[ok], weights=p[ok], minlength=len(grid))
    counts = np.bincount(ids[ok], minlength=len(grid))
    has = counts > 0
    out[has] = sums[has] / counts[has]
    for i in np.flatnonzero(~has):
        out[i] = _overlap_mean(raster, np.asarray(grid[i].vertices), zone)
    return out


def region_population(raster: PopulationRaster, region, zone: Zone | None = None) -> float:
    """Sum of raster cells whose centers fall inside the (unbuffered) region."""
    polys = [region] if hasattr(region, "exterior") else list(region)
    if not polys:
        return 0.0
    x, y, p, _, _ = raster.cells(zone, region_bounds(polys))
    if len(x) == 0:
        return 0.0
    inside = points_in_polygon(x, y, polys)
    return float(p[inside].sum())
