"""Study-region boundary polygons read from WGS84 GeoJSON."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError, GeometryError
from ..geometry.projection import Zone, project, zone_for
from ..geometry.shapes import Polygon, polygon_intersection


def _polygon_rings(geom: dict) -> list[list]:
    kind = geom.get("type")
    if kind == "Polygon":
        return [geom["coordinates"]]
    if kind == "MultiPolygon":
        return list(geom["coordinates"])
    if kind == "GeometryCollection":
        out = []
        for g in geom.get("geometries", []):
            out.extend(_polygon_rings(g))
        return out
    raise DataError(f"unsupported boundary geometry type {kind!r}")


def read_geojson_polygons(path) -> list[list[np.ndarray]]:
    """Polygon rings as ``[exterior, *holes]`` arrays of ``(lon, lat)``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"boundary file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed GeoJSON {path}: {exc}") from exc
    if doc.get("type") == "FeatureCollection":
        geoms = [f.get("geometry") for f in doc.get("features", [])]
    elif doc.get("type") == "Feature":
        geoms = [doc.get("geometry")]
    else:
        geoms = [doc]
    polys = []
    for g in geoms:
        if g is None:
            continue
        for rings in _polygon_rings(g):
            polys.append([np.asarray(r, dtype=float)[:, :2] for r in rings])
    if not polys:
        raise DataError(f"no polygons in {path}")
    return polys


def boundary_zone(path, override: int | None = None) -> Zone:
    """Projection zone from the centroid of the boundary's vertices."""
    polys = read_geojson_polygons(path)
    pts = np.vstack([p[0] for p in polys])
    lon, lat = pts.mean(axis=0)
    return zone_for(float(lon), float(lat), override)


def project_polygons(polys, zone: Zone) -> list[Polygon]:
    out = []
    for rings in polys:
        projected = []
        for r in rings:
            x, y = project(r[:, 1], r[:, 0], zone)
            projected.append(np.column_stack([x, y]))
        try:
            out.append(Polygon(projected[0], tuple(projected[1:])))
        except GeometryError as exc:
            raise DataError(f"invalid boundary ring: {exc}") from exc
    return out


def load_region(files, mode: str, zone: Zone) -> list[Polygon]:
    """Build the study region polygons for a boundary scenario.

    ``intersection`` intersects the first file with the second; the other
    modes take the single file as given.
    """
    files = list(files)
    if mode == "intersection":
        if len(files) != 2:
            raise DataError("intersection mode requires exactly two boundary files")
        a = project_polygons(read_geojson_polygons(files[0]), zone)
        b = project_polygons(read_geojson_polygons(files[1]), zone)
        out = []
        for pa in a:
            for pb in b:
                out.extend(polygon_intersection(pa, pb))
        return out
    if len(files) != 1:
        raise DataError(f"{mode} mode requires exactly one boundary file")
    return project_polygons(read_geojson_polygons(files[0]), zone)
