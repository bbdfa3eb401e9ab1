"""CSV and GeoJSON writers for indicator frames and pipeline intermediates."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .geometry.projection import Zone, unproject


def fmt(value) -> str:
    """Shortest round-tripping text for a cell; NaN and None become empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def jsonable(value):
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if math.isnan(v) or math.isinf(v) else v
    return str(value)


def write_table(path, columns: Mapping[str, Sequence], order: Sequence[str] | None = None) -> Path:
    """Write equal-length columns as CSV with a header row."""
    path = Path(path)
    names = list(order) if order is not None else list(columns)
    if len(set(names)) != len(names):
        raise DataError(f"property name collision in {path.name}")
    n = len(columns[names[0]]) if names else 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        cols = [columns[c] for c in names]
        for i in range(n):
            w.writerow([fmt(c[i]) for c in cols])
    return path


def read_table(path) -> dict[str, list[str]]:
    """Read a CSV back into string columns keyed by header."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, [])
        cols: dict[str, list[str]] = {h: [] for h in header}
        for row in r:
            for h, v in zip(header, row):
                cols[h].append(v)
    return cols


def floats(values: Iterable[str]) -> np.ndarray:
    return np.array([float(v) if v != "" else np.nan for v in values], dtype=float)


def ints(values: Iterable[str]) -> np.ndarray:
    return np.array([int(v) for v in values], dtype=np.int64)


def ring_to_wgs84(ring: np.ndarray, zone: Zone) -> list[list[float]]:
    ring = np.asarray(ring, dtype=float)
    if not np.array_equal(ring[0], ring[-1]):
        ring = np.vstack([ring, ring[:1]])
    lat, lon = unproject(ring[:, 0], ring[:, 1], zone)
    return [[float(a), float(b)] for a, b in zip(np.atleast_1d(lon), np.atleast_1d(lat))]


def polygon_geometry(rings_per_polygon: Sequence[Sequence[np.ndarray]], zone: Zone) -> dict | None:
    """GeoJSON Polygon or MultiPolygon from projected rings (exterior first)."""
    polys = [[ring_to_wgs84(r, zone) for r in rings] for rings in rings_per_polygon if len(rings)]
    if not polys:
        return None
    if len(polys) == 1:
        return {"type": "Polygon", "coordinates": polys[0]}
    return {"type": "MultiPolygon", "coordinates": polys}


def write_feature_collection(path, columns: Mapping[str, Sequence], geometries: Sequence[dict | None],
                             order: Sequence[str] | None = None) -> Path:
    """Features carry the same property names, in the same order, as the CSV mirror."""
    path = Path(path)
    names = list(order) if order is not None else list(columns)
    if len(set(names)) != len(names):
        raise DataError(f"property name collision in {path.name}")
    features = []
    for i, geom in enumerate(geometries):
        props = {n: jsonable(columns[n][i]) for n in names}
        features.append({"type": "Feature", "properties": props, "geometry": geom})
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, allow_nan=False)
        fh.write("\n")
    return path
