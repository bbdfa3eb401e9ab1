"""Stage orchestration: ingest, sample, aggregate, validate.

Each stage persists its results under ``<out>/<region>/`` so later stages
can be rerun on their own. Floats are written with ``repr`` and every
iteration order is fixed, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import shapely

from . import __version__
from .auxdata import (
    gtfs_stops_as_pois,
    hex_populations,
    load_region,
    read_gtfs,
    read_raster,
    region_population,
)
from .auxdata.boundary import boundary_zone
from .config import ProjectConfig, RegionConfig
from .errors import DataError, PedAccessError, StageError
from .geometry import hex_tessellate
from .geometry.hexgrid import HexCell, HexGrid, cell_vertices
from .geometry.projection import Zone, project
from .geometry.shapes import Polygon, points_in_polygon, region_area, region_bounds
from .indicators import (
    DAILY_LIVING_CLASSES,
    SampleEstimates,
    SamplePoints,
    aggregate_city,
    aggregate_hex,
    between_city_z,
    city_columns,
    estimate_sample_points,
    filter_sample_points,
    generate_sample_points,
    hex_columns,
)
from .indicators.estimate import Z_COLUMNS, methods_for
from .network import consolidate_intersections, nearest_destination_field, node_catchments, node_local_density
from .osm import build_pedestrian_graph, extract_pois, parse_osm
from .osm.graph import PedestrianGraph
from .osm.pois import PoiSet
from .outputs import floats, ints, polygon_geometry, read_table, write_feature_collection, write_table
from .validation import destination_overlap, edge_overlap, hex_truth_stats, quintile_sample, write_sample_csv

STAGES = ("ingest", "sample", "aggregate", "validate")

INGEST_FILES = ("region.json", "graph_nodes.csv", "graph_edges.csv", "pois.csv", "hexes.csv",
                "intersections.csv")
SAMPLE_FILE = "sample_points.csv"


@dataclass
class ValidationInputs:
    official_edges: Path | None = None
    official_dests: Path | None = None
    radii: tuple[float, ...] = (10.0, 50.0)
    seed: int = 0
    n_per_quintile: int = 10


@dataclass
class RunManifest:
    tool_version: str
    config_hash: str
    stages: dict[str, dict[str, str]] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    diagnostics: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tool_version": self.tool_version, "config_hash": self.config_hash, "stages": self.stages,
                "inputs": dict(sorted(self.inputs.items())), "outputs": dict(sorted(self.outputs.items())),
                "diagnostics": self.diagnostics}


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_input(path: Path) -> str:
    if path.is_dir():
        h = hashlib.sha256()
        for p in sorted(path.rglob("*")):
            if p.is_file():
                h.update(p.relative_to(path).as_posix().encode())
                h.update(sha256_file(p).encode())
        return h.hexdigest()
    return sha256_file(path)


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


class _Run:
    """Mutable bookkeeping shared by the stages of one invocation."""

    def __init__(self, cfg: ProjectConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.manifest = RunManifest(__version__, cfg.digest())

    def record(self, path: Path) -> Path:
        self.manifest.outputs[path.relative_to(self.out).as_posix()] = sha256_file(path)
        return path

    def region_dir(self, name: str) -> Path:
        return self.out / name

    def require(self, path: Path, region: str, stage: str) -> Path:
        if not path.exists():
            raise StageError(f"missing upstream stage output: {path.name}", region, stage)
        return path


# ------------------------------------------------------------------ persistence


def _region_record(d: Path) -> dict:
    return json.loads((d / "region.json").read_text())


def _zone(rec: dict) -> Zone:
    return Zone(int(rec["zone"]), bool(rec["south"]))


def _polygons(rec: dict) -> list[Polygon]:
    return [Polygon(np.array(p[0]), tuple(np.array(h) for h in p[1:])) for p in rec["polygons"]]


def save_graph(d: Path, g: PedestrianGraph) -> list[Path]:
    nodes = write_table(d / "graph_nodes.csv", {"node_id": g.node_ids, "x": g.xy[:, 0], "y": g.xy[:, 1]})
    coords = [";".join(f"{x!r} {y!r}" for x, y in line.tolist()) for line in g.polylines]
    edges = write_table(d / "graph_edges.csv", {
        "u": g.node_ids[g.u], "v": g.node_ids[g.v], "way_id": g.way_ids, "length": g.length, "coords": coords})
    return [nodes, edges]


def load_graph(d: Path, zone: Zone | None = None) -> PedestrianGraph:
    n = read_table(d / "graph_nodes.csv")
    e = read_table(d / "graph_edges.csv")
    node_ids = ints(n["node_id"])
    xy = np.column_stack([floats(n["x"]), floats(n["y"])]).reshape(-1, 2)
    u = np.searchsorted(node_ids, ints(e["u"]))
    v = np.searchsorted(node_ids, ints(e["v"]))
    polys = [np.array([[float(a) for a in p.split()] for p in c.split(";")]) for c in e["coords"]]
    return PedestrianGraph(node_ids, xy, u.astype(np.int64), v.astype(np.int64), floats(e["length"]),
                           polys, ints(e["way_id"]), zone)


def save_pois(path: Path, pois: dict[str, PoiSet]) -> Path:
    cls, ids, xs, ys = [], [], [], []
    for c in sorted(pois):
        p = pois[c]
        cls += [c] * len(p)
        ids += list(p.ids)
        xs += p.xy[:, 0].tolist() if len(p) else []
        ys += p.xy[:, 1].tolist() if len(p) else []
    return write_table(path, {"class": cls, "id": ids, "x": np.array(xs, dtype=float), "y": np.array(ys, dtype=float)})


def load_pois(path: Path, classes: Iterable[str]) -> dict[str, PoiSet]:
    t = read_table(path)
    out = {c: PoiSet(c) for c in sorted(classes)}
    x, y = floats(t["x"]), floats(t["y"])
    for c in out:
        m = np.array([k == c for k in t["class"]], dtype=bool)
        out[c].ids = [i for i, keep in zip(t["id"], m) if keep]
        out[c].xy = np.column_stack([x[m], y[m]]).reshape(-1, 2)
        out[c].tags = [{} for _ in out[c].ids]
    return out


def save_grid(path: Path, grid: HexGrid) -> Path:
    cells = list(grid)
    return write_table(path, {
        "hex_id": [c.id for c in cells], "col": [c.col for c in cells], "row": [c.row for c in cells],
        "x": [float(c.center[0]) for c in cells], "y": [float(c.center[1]) for c in cells],
        "area_km2": [c.area_km2 for c in cells], "population": [float(c.population) for c in cells],
        "intersection_count": [int(c.intersection_count) for c in cells]})


def load_grid(path: Path, origin, diagonal: float) -> HexGrid:
    t = read_table(path)
    radius = diagonal / 2
    cells = []
    for i, col, row, x, y, a, p, n in zip(ints(t["hex_id"]), ints(t["col"]), ints(t["row"]), floats(t["x"]),
                                          floats(t["y"]), floats(t["area_km2"]), floats(t["population"]),
                                          ints(t["intersection_count"])):
        center = (float(x), float(y))
        cells.append(HexCell(int(i), int(col), int(row), center, cell_vertices(center, radius), float(a),
                             float(p), int(n)))
    return HexGrid(tuple(origin), diagonal, cells)


# ------------------------------------------------------------------ stages


def ingest_region(run: _Run, rc: RegionConfig) -> dict:
    cfg = run.cfg
    d = run.region_dir(rc.name)
    d.mkdir(parents=True, exist_ok=True)
    boundary = [cfg.input_path(f) for f in rc.boundary_files]
    for p in boundary:
        if not p.exists():
            raise DataError(f"boundary file not found: {p}")
    zone = boundary_zone(boundary[0], rc.utm_zone_override)
    region = load_region(boundary, rc.boundary_mode, zone)
    if not region:
        raise DataError("study region is empty")
    osm_path = cfg.input_path(rc.osm_file)
    inputs = [osm_path, *boundary, cfg.input_path(rc.population_raster)]

    stream = parse_osm(osm_path)
    g = build_pedestrian_graph(stream, region, cfg.buffer_m, zone)
    queries = {c: [tuple(q) for q in qs] for c, qs in cfg.destination_queries.items()}
    pois = extract_pois(stream, queries, region, cfg.buffer_m, zone)
    diag: dict = {"osm": dict(stream.diagnostics), "graph": dict(g.diagnostics)}
    if rc.gtfs_feed is not None and cfg.pt_source != "osm":
        gtfs_path = cfg.input_path(rc.gtfs_feed)
        inputs.append(gtfs_path)
        feed = read_gtfs(gtfs_path)
        osm_pt = pois.get("pt_any") if cfg.pt_source == "both" else None
        pois["pt_any"] = gtfs_stops_as_pois(feed, region, cfg.buffer_m, zone, osm_pt)
        diag["gtfs"] = dict(feed.diagnostics)
    diag["pois"] = {c: len(p) for c, p in sorted(pois.items())}

    grid = hex_tessellate(region_bounds(region, cfg.buffer_m), cfg.hex_diagonal_m)
    raster = read_raster(cfg.input_path(rc.population_raster), rc.population_crs)
    for cell, p in zip(grid, hex_populations(raster, grid, zone).tolist()):
        cell.population = p
    inter = consolidate_intersections(g, cfg.intersection_tolerance_m)
    for cell, n in zip(grid, inter.hex_counts(grid).tolist()):
        cell.intersection_count = n
    inside = (points_in_polygon(inter.xy[:, 0], inter.xy[:, 1], region) if len(inter)
              else np.zeros(0, dtype=bool))
    diag["raster"] = dict(raster.diagnostics)
    diag["intersections"] = {"consolidated": len(inter), "in_region": int(inside.sum())}

    rec = {"name": rc.name, "zone": zone.number, "south": bool(zone.south),
           "origin": [float(grid.origin[0]), float(grid.origin[1])], "hex_diagonal_m": cfg.hex_diagonal_m,
           "polygons": [[r.tolist() for r in p.rings] for p in region],
           "area_km2": region_area(region) * 1e-6, "pop_est": region_population(raster, region, zone),
           "intersection_count": int(inside.sum()), "diagnostics": diag}
    written = save_graph(d, g)
    written.append(save_pois(d / "pois.csv", pois))
    written.append(save_grid(d / "hexes.csv", grid))
    written.append(write_table(d / "intersections.csv", {
        "x": inter.xy[:, 0] if len(inter) else [], "y": inter.xy[:, 1] if len(inter) else [],
        "n_members": [len(m) for m in inter.members]}))
    (d / "region.json").write_text(json.dumps(rec, sort_keys=True) + "\n")
    written.append(d / "region.json")
    for p in written:
        run.record(p)
    for p in inputs:
        run.manifest.inputs[p.as_posix()] = _digest_input(p)
    return diag


def _point_columns(est: SampleEstimates, method: str) -> dict[str, np.ndarray]:
    p = est.points
    cols = {"id": p.id, "x": p.x, "y": p.y, "edge": p.edge, "n1": p.n1, "n2": p.n2, "l1": p.l1, "l2": p.l2,
            "hex_id": p.hex, "nh_population_density": est.nh_population_density,
            "nh_intersection_density": est.nh_intersection_density}
    for cls in sorted(est.distance):
        cols[f"dist_{cls}"] = est.distance[cls]
        for m in methods_for(method):
            cols[f"access_{cls}_{m}"] = est.scores[cls][m]
    cols["daily_living"] = est.daily_living.astype(np.int64)
    for name in Z_COLUMNS:
        cols[name] = est.z[name]
    cols["walkability"] = est.walkability
    return cols


def read_sample_estimates(path: Path, classes: Sequence[str], method: str) -> SampleEstimates:
    t = read_table(path)
    pts = SamplePoints(ints(t["id"]), floats(t["x"]), floats(t["y"]), ints(t["edge"]), ints(t["n1"]),
                       ints(t["n2"]), floats(t["l1"]), floats(t["l2"]), ints(t["hex_id"]))
    distance = {c: floats(t[f"dist_{c}"]) for c in sorted(classes)}
    scores = {c: {m: floats(t[f"access_{c}_{m}"]) for m in methods_for(method)} for c in sorted(classes)}
    return SampleEstimates(pts, floats(t["nh_population_density"]), floats(t["nh_intersection_density"]),
                           distance, scores, ints(t["daily_living"]), {z: floats(t[z]) for z in Z_COLUMNS},
                           floats(t["walkability"]))


def sample_region(run: _Run, rc: RegionConfig, threads: int = 1) -> dict:
    cfg = run.cfg
    d = run.region_dir(rc.name)
    for f in INGEST_FILES:
        run.require(d / f, rc.name, "sample")
    rec = _region_record(d)
    zone, region = _zone(rec), _polygons(rec)
    g = load_graph(d, zone)
    grid = load_grid(d / "hexes.csv", rec["origin"], rec["hex_diagonal_m"])
    pois = load_pois(d / "pois.csv", cfg.destination_queries)

    pts = generate_sample_points(g, cfg.sample_interval_m)
    n_all = len(pts)
    if len(pts):
        pts = pts.subset(points_in_polygon(pts.x, pts.y, region))
    n_region = len(pts)
    pts.hex = grid.locate(pts.x, pts.y) if len(pts) else pts.hex
    pts = filter_sample_points(pts, grid.populations(), cfg.pop_threshold)

    node_hex = grid.locate(g.xy[:, 0], g.xy[:, 1]) if g.n_nodes else np.empty(0, dtype=np.int64)
    if (node_hex < 0).any():
        raise DataError("graph node outside the hex grid")
    pos = np.searchsorted(g.node_ids, np.concatenate([pts.n1, pts.n2])) if len(pts) else np.empty(0, np.int64)
    needed = np.unique(pos)
    catch = node_catchments(g, node_hex, cfg.neighborhood_distance_m, needed, threads)
    node_pop = np.full(g.n_nodes, np.nan)
    node_int = np.full(g.n_nodes, np.nan)
    if len(needed):
        node_pop[needed], node_int[needed] = node_local_density(catch, grid.pop_density(),
                                                                grid.intersection_density())
    fields = {c: nearest_destination_field(g, pois[c], cfg.snap_max_m, cfg.destination_cutoff_m)
              for c in sorted(pois)}
    daily = DAILY_LIVING_CLASSES if all(c in fields for c in DAILY_LIVING_CLASSES) else ()
    if not daily:
        raise DataError("daily living classes missing from destination_queries")
    est = estimate_sample_points(g, pts, node_pop, node_int, fields, cfg.access_method, cfg.access_params, daily)
    run.record(write_table(d / SAMPLE_FILE, _point_columns(est, cfg.access_method)))
    diag = {"points_generated": n_all, "points_in_region": n_region, "points_retained": len(est),
            "catchment_nodes": int(len(needed)), **est.diagnostics,
            "destinations": {c: f.diagnostics for c, f in sorted(fields.items())}}
    return diag


def aggregate_regions(run: _Run, regions: Sequence[RegionConfig]) -> dict:
    cfg = run.cfg
    classes = sorted(cfg.destination_queries)
    hex_frames, city_frames, hex_geoms, city_geoms, grids = [], [], [], [], []
    for rc in regions:
        d = run.region_dir(rc.name)
        try:
            for f in ("region.json", "hexes.csv", SAMPLE_FILE):
                run.require(d / f, rc.name, "aggregate")
            rec = _region_record(d)
            grid = load_grid(d / "hexes.csv", rec["origin"], rec["hex_diagonal_m"])
            est = read_sample_estimates(d / SAMPLE_FILE, classes, cfg.access_method)
            hexf = aggregate_hex(est, grid, rc.name, cfg.access_distance_m, cfg.access_method)
            cityf = aggregate_city(hexf, rc.name, rec["area_km2"], rec["pop_est"], rec["intersection_count"],
                                   cfg.access_distance_m, classes, cfg.access_method)
        except StageError:
            raise
        except PedAccessError as exc:
            raise StageError(str(exc), rc.name, "aggregate") from exc
        zone = _zone(rec)
        hex_frames.append(hexf)
        city_frames.append(cityf)
        hex_geoms.append([polygon_geometry([[grid[int(h)].vertices]], zone) for h in hexf["hex_id"]])
        city_geoms.append(polygon_geometry([[np.array(r) for r in p] for p in rec["polygons"]], zone))
    flags = between_city_z(hex_frames, city_frames)
    hcols = hex_columns(cfg.access_distance_m, classes, cfg.access_method)
    ccols = city_columns(cfg.access_distance_m, classes, cfg.access_method)
    for rc, hexf, geoms in zip(regions, hex_frames, hex_geoms):
        cols = {c: hexf[c] if len(hexf) else [] for c in hcols}
        run.record(write_table(run.out / f"{rc.name}_hex.csv", cols, hcols))
        run.record(write_feature_collection(run.out / f"{rc.name}_hex.geojson", cols, geoms, hcols))
    city = {c: np.concatenate([f[c] for f in city_frames]) for c in ccols}
    run.record(write_table(run.out / "all_cities.csv", city, ccols))
    run.record(write_feature_collection(run.out / "all_cities.geojson", city, city_geoms, ccols))
    return {"between_city_flags": flags, "hexes": {rc.name: len(h) for rc, h in zip(regions, hex_frames)}}


def _read_lines_geojson(path: Path, zone: Zone) -> list[np.ndarray]:
    data = json.loads(Path(path).read_text())
    feats = data["features"] if data.get("type") == "FeatureCollection" else [data]
    out = []
    for f in feats:
        geom = f.get("geometry") if f.get("type") == "Feature" else f
        if not geom:
            continue
        parts = {"LineString": [geom.get("coordinates", [])],
                 "MultiLineString": geom.get("coordinates", [])}.get(geom.get("type"), [])
        for part in parts:
            a = np.asarray(part, dtype=float).reshape(-1, 2)
            if len(a) >= 2:
                x, y = project(a[:, 1], a[:, 0], zone)
                out.append(np.column_stack([x, y]))
    return out


def _read_points_geojson(path: Path, zone: Zone) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    feats = data["features"] if data.get("type") == "FeatureCollection" else [data]
    pts = []
    for f in feats:
        geom = f.get("geometry") if f.get("type") == "Feature" else f
        if not geom:
            continue
        if geom.get("type") == "Point":
            pts.append(geom["coordinates"][:2])
        elif geom.get("type") == "MultiPoint":
            pts.extend(c[:2] for c in geom["coordinates"])
    if not pts:
        return np.empty((0, 2))
    a = np.asarray(pts, dtype=float)
    x, y = project(a[:, 1], a[:, 0], zone)
    return np.column_stack([np.atleast_1d(x), np.atleast_1d(y)])


def _clip_lines(lines: Sequence[np.ndarray], region: Sequence[Polygon]) -> list[np.ndarray]:
    area = shapely.union_all([p.to_shapely() for p in region])
    out = []
    for ln in lines:
        clipped = shapely.LineString(ln).intersection(area)
        for part in getattr(clipped, "geoms", [clipped]):
            if isinstance(part, shapely.LineString) and not part.is_empty:
                out.append(np.asarray(part.coords))
    return out


def validate_region(run: _Run, rc: RegionConfig, opts: ValidationInputs) -> dict:
    cfg = run.cfg
    d = run.region_dir(rc.name)
    for f in INGEST_FILES:
        run.require(d / f, rc.name, "validate")
    rec = _region_record(d)
    zone, region = _zone(rec), _polygons(rec)
    grid = load_grid(d / "hexes.csv", rec["origin"], rec["hex_diagonal_m"])
    cls = cfg.validation_class
    pois = load_pois(d / "pois.csv", [cls])[cls]
    osm_xy = pois.xy[points_in_polygon(pois.xy[:, 0], pois.xy[:, 1], region)] if len(pois) else pois.xy
    ids = [i for i, keep in zip(pois.ids, points_in_polygon(pois.xy[:, 0], pois.xy[:, 1], region))
           if keep] if len(pois) else []
    diag: dict = {"validation_destinations": len(ids)}
    if ids:
        hid = grid.locate(osm_xy[:, 0], osm_xy[:, 1])
        dens = grid.pop_density()[hid]
        rows = quintile_sample(ids, [cls] * len(ids), osm_xy, dens, opts.n_per_quintile, opts.seed)
        path = d / "validation_sample.csv"
        write_sample_csv(path, rows, zone)
        run.record(path)
        diag["sampled"] = len(rows)
    if opts.official_edges is not None:
        g = load_graph(d, zone)
        official = _clip_lines(_read_lines_geojson(opts.official_edges, zone), region)
        osm = _clip_lines(g.polylines, region)
        r = edge_overlap(osm, official, opts.radii)
        cols = {"study_region": [rc.name], "osm_length_km": [r.total_len_osm / 1000],
                "official_length_km": [r.total_len_official / 1000]}
        for rad, pct in sorted(r.pct_official_within.items()):
            cols[f"pct_official_within_{rad:g}m"] = [pct]
        run.record(write_table(d / "validation_edges.csv", cols))
        run.manifest.inputs[Path(opts.official_edges).as_posix()] = sha256_file(Path(opts.official_edges))
    if opts.official_dests is not None:
        off = _read_points_geojson(opts.official_dests, zone)
        off = off[points_in_polygon(off[:, 0], off[:, 1], region)] if len(off) else off
        cols = {"study_region": [], "destination_class": [], "buffer_m": [], "osm_count": [],
                "official_count": [], "pct_osm_overlapping_official": [], "pct_official_overlapping_osm": []}
        for rad in opts.radii:
            a, b = destination_overlap(osm_xy, off, rad)
            for k, v in zip(cols, (rc.name, cls, float(rad), len(osm_xy), len(off), a, b)):
                cols[k].append(v)
        run.record(write_table(d / "validation_destinations.csv", cols))
        # hex agreement over cells whose centre lies in the study region
        centers = grid.centers
        keep = np.flatnonzero(points_in_polygon(centers[:, 0], centers[:, 1], region))
        sub = HexGrid(grid.origin, grid.diagonal, [
            HexCell(k, grid[int(i)].col, grid[int(i)].row, grid[int(i)].center, grid[int(i)].vertices,
                    grid[int(i)].area_km2) for k, i in enumerate(keep)])
        h = hex_truth_stats(osm_xy, off, sub)
        run.record(write_table(d / "validation_hex_summary.csv", {
            "study_region": [rc.name], "destination_class": [cls], "hex_count": [len(sub)],
            "pct_true_condition": [h.pct_true_condition],
            "avg_weight_osm_all": [h.avg_weight_osm_all], "avg_weight_official_all": [h.avg_weight_official_all],
            "avg_weight_osm_true": [h.avg_weight_osm_true],
            "avg_weight_official_true": [h.avg_weight_official_true]}))
        per = dict(h.per_hex)
        per["hex_id"] = keep.astype(np.int64)
        run.record(write_table(d / "validation_hex.csv", per))
        run.manifest.inputs[Path(opts.official_dests).as_posix()] = sha256_file(Path(opts.official_dests))
    return diag


# ------------------------------------------------------------------ driver


def run_pipeline(cfg: ProjectConfig, stages: Iterable[str] = STAGES, regions: Sequence[str] | None = None,
                 out: Path | None = None, threads: int = 1,
                 validation: ValidationInputs | None = None) -> RunManifest:
    """Run the requested stages in canonical order and write ``manifest.json`` last."""
    stages = set(stages)
    unknown = stages - set(STAGES)
    if unknown:
        raise StageError(f"unknown stage(s) {sorted(unknown)}")
    selected = [cfg.region(n) for n in regions] if regions else list(cfg.regions)
    out = Path(out) if out is not None else cfg.output_path()
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg, out)
    validation = validation or ValidationInputs()
    for stage in STAGES:
        if stage not in stages:
            continue
        start = _now()
        if stage == "aggregate":
            run.manifest.diagnostics["aggregate"] = aggregate_regions(run, selected)
        else:
            for rc in selected:
                try:
                    if stage == "ingest":
                        diag = ingest_region(run, rc)
                    elif stage == "sample":
                        diag = sample_region(run, rc, threads)
                    else:
                        diag = validate_region(run, rc, validation)
                except StageError:
                    raise
                except PedAccessError as exc:
                    raise StageError(str(exc), rc.name, stage) from exc
                run.manifest.diagnostics.setdefault(stage, {})[rc.name] = diag
        run.manifest.stages[stage] = {"started": start, "finished": _now()}
    (out / "manifest.json").write_text(json.dumps(run.manifest.to_dict(), indent=2, sort_keys=False,
                                                  default=str) + "\n")
    return run.manifest
