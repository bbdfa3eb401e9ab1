"""Synthetic street grids and complete input sets for tests and benchmarks."""
from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import quoteattr

import numpy as np

from .geometry.projection import Zone, unproject
from .osm.graph import PedestrianGraph

# anchor of generated cities: central meridian of zone 32, mid latitudes
ZONE = Zone(32)
ORIGIN = (500_000.0, 5_300_000.0)


def grid_graph(n_cols: int, n_rows: int, spacing: float = 100.0, jitter: float = 0.0,
               drop: float = 0.0, seed: int = 0, origin=(0.0, 0.0)) -> PedestrianGraph:
    """Rectangular street grid with optional vertex jitter and randomly removed edges.

    Node ids are ``row * n_cols + col + 1``; every edge is a straight segment.
    """
    rng = np.random.default_rng(seed)
    ids, xy = [], []
    for r in range(n_rows):
        for c in range(n_cols):
            ids.append(r * n_cols + c + 1)
            xy.append((origin[0] + c * spacing, origin[1] + r * spacing))
    xy = np.array(xy, dtype=float)
    if jitter:
        xy += rng.uniform(-jitter, jitter, xy.shape)
    edges = []
    for r in range(n_rows):
        for c in range(n_cols):
            a = r * n_cols + c
            for b in ([a + 1] if c + 1 < n_cols else []) + ([a + n_cols] if r + 1 < n_rows else []):
                if drop and rng.random() < drop:
                    continue
                edges.append((ids[a], ids[b], np.array([xy[a], xy[b]])))
    used = sorted({e[0] for e in edges} | {e[1] for e in edges})
    keep = np.array(used) - 1
    return PedestrianGraph.from_edges(np.array(used), xy[keep], edges)


def random_graph(n: int, seed: int, extent: float = 3000.0, k: int = 3) -> PedestrianGraph:
    """Random planar-ish graph: each node joins its ``k`` nearest neighbours.

    Edge lengths are Euclidean, so weights are irrational and ties between
    distinct paths are vanishingly unlikely.
    """
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0, extent, (n, 2))
    ids = np.arange(1, n + 1)
    seen = set()
    edges = []
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    for i in range(n):
        for j in np.argsort(d[i])[1:k + 1].tolist():
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                edges.append((ids[key[0]], ids[key[1]], xy[list(key)]))
    return PedestrianGraph.from_edges(ids, xy, edges)


# ------------------------------------------------------------ full input sets


def _osm_xml(path: Path, nodes, ways, pois) -> None:
    with open(path, "w") as fh:
        fh.write('<?xml version="1.0" encoding="UTF-8"?>\n<osm version="0.6" generator="pedaccess-synthetic">\n')
        for nid, (lat, lon) in nodes:
            fh.write(f'  <node id="{nid}" lat="{lat:.9f}" lon="{lon:.9f}"/>\n')
        for nid, (lat, lon), tags in pois:
            fh.write(f'  <node id="{nid}" lat="{lat:.9f}" lon="{lon:.9f}">\n')
            for k, v in tags.items():
                fh.write(f"    <tag k={quoteattr(k)} v={quoteattr(v)}/>\n")
            fh.write("  </node>\n")
        for wid, refs, tags in ways:
            fh.write(f'  <way id="{wid}">\n')
            for r in refs:
                fh.write(f'    <nd ref="{r}"/>\n')
            for k, v in tags.items():
                fh.write(f"    <tag k={quoteattr(k)} v={quoteattr(v)}/>\n")
            fh.write("  </way>\n")
        fh.write("</osm>\n")


POI_TAGS = {
    "fresh_food_market": {"shop": "supermarket"},
    "convenience": {"shop": "convenience"},
    "pt_any": {"highway": "bus_stop"},
    "public_open_space_any": {"leisure": "park"},
}


def write_grid_city(directory, name: str = "gridville", n_side: int = 100, spacing: float = 100.0,
                    n_pois: int = 200, seed: int = 0, raster_cell: float = 100.0,
                    origin=ORIGIN) -> Path:
    """Write OSM XML, population raster, boundary and config for a square grid city.

    The street grid has ``n_side``² nodes. The boundary is the grid's
    inner square inset by one block; the raster covers the grid plus a
    margin. Returns the path of the generated config file.
    """
    rng = np.random.default_rng(seed)
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    x0, y0 = origin
    cols = np.arange(n_side)
    gx, gy = np.meshgrid(x0 + cols * spacing, y0 + cols * spacing)
    lat, lon = unproject(gx.ravel(), gy.ravel(), ZONE)
    nodes = [(i + 1, (float(a), float(b))) for i, (a, b) in enumerate(zip(lat, lon))]
    ways = []
    wid = 1
    for r in range(n_side):
        ways.append((wid, [r * n_side + c + 1 for c in range(n_side)], {"highway": "residential"}))
        wid += 1
    for c in range(n_side):
        ways.append((wid, [r * n_side + c + 1 for r in range(n_side)], {"highway": "footway" if c % 7 == 3 else "residential"}))
        wid += 1
    extent = (n_side - 1) * spacing
    pois = []
    classes = sorted(POI_TAGS)
    for k in range(n_pois):
        px, py = x0 + rng.uniform(0, extent), y0 + rng.uniform(0, extent)
        plat, plon = unproject(px, py, ZONE)
        pois.append((10_000_000 + k, (float(plat), float(plon)), POI_TAGS[classes[k % len(classes)]]))
    osm = d / f"{name}.osm"
    _osm_xml(osm, nodes, ways, pois)

    margin = 2000.0
    nx = int(np.ceil((extent + 2 * margin) / raster_cell))
    xll, yll = x0 - margin, y0 - margin
    cx = xll + (np.arange(nx) + 0.5) * raster_cell
    cy = yll + (nx - np.arange(nx) - 0.5) * raster_cell
    mx, my = np.meshgrid(cx, cy)
    centre = np.array([x0 + extent / 2, y0 + extent / 2])
    r2 = ((mx - centre[0]) ** 2 + (my - centre[1]) ** 2) / (extent / 2) ** 2
    pop = np.round(60.0 * np.exp(-r2) + rng.uniform(0, 3, mx.shape), 3)
    pop[rng.random(pop.shape) < 0.01] = -9999
    raster = d / f"{name}_pop.asc"
    with open(raster, "w") as fh:
        fh.write(f"ncols {nx}\nnrows {nx}\nxllcorner {xll!r}\nyllcorner {yll!r}\ncellsize {raster_cell!r}\nNODATA_value -9999\n")
        for row in pop:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    inset = spacing
    corners = [(x0 + inset, y0 + inset), (x0 + extent - inset, y0 + inset),
               (x0 + extent - inset, y0 + extent - inset), (x0 + inset, y0 + extent - inset)]
    ring = []
    for px, py in corners + corners[:1]:
        blat, blon = unproject(px, py, ZONE)
        ring.append([float(blon), float(blat)])
    boundary = d / f"{name}_boundary.geojson"
    boundary.write_text(json.dumps({"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"name": name}, "geometry": {"type": "Polygon", "coordinates": [ring]}}]}))

    config = d / "config.toml"
    config.write_text(
        "[project]\n"
        "buffer_m = 1600\n\n"
        "[paths]\n"
        f'input_dir = "{d.as_posix()}"\n'
        f'output_dir = "{(d / "out").as_posix()}"\n\n'
        "[[regions]]\n"
        f'name = "{name}"\n'
        'boundary_mode = "custom"\n'
        f'boundary_files = ["{boundary.name}"]\n'
        f'osm_file = "{osm.name}"\n'
        f'population_raster = "{raster.name}"\n'
        f"utm_zone_override = {ZONE.number}\n"
    )
    return config
