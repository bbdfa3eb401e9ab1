"""Project and region configuration read from TOML files."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .errors import ConfigError
from .indicators.scores import METHODS, AccessParams

BOUNDARY_MODES = ("ucdb_only", "intersection", "custom")
PT_SOURCES = ("osm", "gtfs", "both")

# A starting point only: local tagging practice varies and should be reviewed per city.
DEFAULT_DESTINATIONS: dict[str, list[list[str]]] = {
    "fresh_food_market": [["shop", "supermarket"], ["shop", "greengrocer"], ["shop", "bakery"],
                          ["shop", "butcher"], ["shop", "seafood"], ["shop", "deli"],
                          ["amenity", "marketplace"]],
    "convenience": [["shop", "convenience"], ["shop", "newsagent"], ["shop", "kiosk"]],
    "pt_any": [["highway", "bus_stop"], ["public_transport", "platform"], ["public_transport", "stop_position"],
               ["railway", "station"], ["railway", "halt"], ["railway", "tram_stop"],
               ["amenity", "bus_station"], ["amenity", "ferry_terminal"]],
    "public_open_space_any": [["leisure", "park"], ["leisure", "garden"], ["leisure", "playground"],
                              ["leisure", "nature_reserve"], ["leisure", "common"],
                              ["landuse", "recreation_ground"]],
}

_LENGTHS = ("sample_interval_m", "hex_diagonal_m", "neighborhood_distance_m", "access_distance_m",
            "buffer_m", "intersection_tolerance_m", "snap_max_m", "destination_cutoff_m")


@dataclass
class RegionConfig:
    name: str
    boundary_mode: str
    boundary_files: list[str]
    osm_file: str
    population_raster: str
    population_crs: str = "projected"
    utm_zone_override: int | None = None
    gtfs_feed: str | None = None


@dataclass
class ProjectConfig:
    regions: list[RegionConfig]
    sample_interval_m: float = 30.0
    hex_diagonal_m: float = 250.0
    neighborhood_distance_m: float = 1000.0
    access_distance_m: float = 500.0
    buffer_m: float = 1600.0
    pop_threshold: float = 5.0
    access_method: str = "binary"
    access_params: AccessParams = field(default_factory=AccessParams)
    destination_queries: dict[str, list[list[str]]] = field(default_factory=lambda: {
        k: [list(p) for p in v] for k, v in DEFAULT_DESTINATIONS.items()})
    intersection_tolerance_m: float = 12.0
    snap_max_m: float = 500.0
    destination_cutoff_m: float = 1600.0
    pt_source: str = "both"
    validation_class: str = "fresh_food_market"
    input_dir: str = "."
    output_dir: str = "out"
    base_dir: Path = field(default=Path("."), compare=False)

    def region(self, name: str) -> RegionConfig:
        for r in self.regions:
            if r.name == name:
                return r
        raise ConfigError(f"unknown region {name!r}")

    def input_path(self, name: str) -> Path:
        p = Path(name)
        if p.is_absolute():
            return p
        base = Path(self.input_dir)
        base = base if base.is_absolute() else self.base_dir / base
        return base / p

    def output_path(self) -> Path:
        p = Path(self.output_dir)
        return p if p.is_absolute() else self.base_dir / p

    def to_dict(self) -> dict[str, Any]:
        project = {k: getattr(self, k) for k in (
            "sample_interval_m", "hex_diagonal_m", "neighborhood_distance_m", "access_distance_m",
            "buffer_m", "pop_threshold", "access_method", "intersection_tolerance_m", "snap_max_m",
            "destination_cutoff_m", "pt_source", "validation_class")}
        p = self.access_params
        project["access_params"] = {"t": p.t, "k": p.k, "v": p.v}
        regions = []
        for r in self.regions:
            d = {"name": r.name, "boundary_mode": r.boundary_mode, "boundary_files": list(r.boundary_files),
                 "osm_file": r.osm_file, "population_raster": r.population_raster,
                 "population_crs": r.population_crs}
            if r.utm_zone_override is not None:
                d["utm_zone_override"] = r.utm_zone_override
            if r.gtfs_feed is not None:
                d["gtfs_feed"] = r.gtfs_feed
            regions.append(d)
        return {"project": project, "paths": {"input_dir": self.input_dir, "output_dir": self.output_dir},
                "destinations": {k: [list(kv) for kv in v] for k, v in sorted(self.destination_queries.items())},
                "regions": regions}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number") from exc
    if not v > 0:
        raise ConfigError(f"non-positive length: {name} = {value}")
    return v


def _region(raw: dict, index: int) -> RegionConfig:
    name = raw.get("name")
    if not name:
        raise ConfigError(f"missing required key: regions[{index}].name")
    files = raw.get("boundary_files")
    if not files:
        raise ConfigError(f"missing required key: regions[{index}].boundary_files")
    if isinstance(files, str):
        files = [files]
    mode = raw.get("boundary_mode", "custom")
    if mode not in BOUNDARY_MODES:
        raise ConfigError(f"unknown boundary_mode {mode!r} for region {name}")
    want = 2 if mode == "intersection" else 1
    if len(files) != want:
        raise ConfigError(f"region {name}: {mode} mode requires exactly {want} boundary file(s)")
    crs = raw.get("population_crs", "projected")
    if crs not in ("projected", "wgs84"):
        raise ConfigError(f"region {name}: population_crs must be 'projected' or 'wgs84'")
    zone = raw.get("utm_zone_override")
    if zone is not None and not (isinstance(zone, int) and 1 <= zone <= 60):
        raise ConfigError(f"region {name}: utm_zone_override must be an integer in 1..60")
    known = {"name", "boundary_mode", "boundary_files", "osm_file", "population_raster", "population_crs",
             "utm_zone_override", "gtfs_feed"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"region {name}: unknown keys {sorted(extra)}")
    return RegionConfig(name=str(name), boundary_mode=mode, boundary_files=[str(f) for f in files],
                        osm_file=str(raw.get("osm_file", f"{name}.osm.pbf")),
                        population_raster=str(raw.get("population_raster", f"{name}_pop.asc")),
                        population_crs=crs, utm_zone_override=zone,
                        gtfs_feed=None if raw.get("gtfs_feed") is None else str(raw["gtfs_feed"]))


def parse_config(data: dict, base_dir: Path = Path(".")) -> ProjectConfig:
    """Validate a parsed TOML document and fill in defaults."""
    project = dict(data.get("project", {}))
    params = dict(project.pop("access_params", {}))
    known = set(_LENGTHS) | {"pop_threshold", "access_method", "pt_source", "validation_class"}
    extra = set(project) - known
    if extra:
        raise ConfigError(f"unknown [project] keys {sorted(extra)}")
    kw: dict[str, Any] = {}
    for k in _LENGTHS:
        if k in project:
            kw[k] = _positive(k, project[k])
    if "destination_cutoff_m" not in kw:
        kw["destination_cutoff_m"] = kw.get("buffer_m", 1600.0)
    if "pop_threshold" in project:
        pt = float(project["pop_threshold"])
        if pt < 0:
            raise ConfigError("pop_threshold must be >= 0")
        kw["pop_threshold"] = pt
    method = project.get("access_method", "binary")
    if method not in METHODS:
        raise ConfigError(f"unknown access_method {method!r}")
    kw["access_method"] = method
    src = project.get("pt_source", "both")
    if src not in PT_SOURCES:
        raise ConfigError(f"unknown pt_source {src!r}")
    kw["pt_source"] = src
    if "validation_class" in project:
        kw["validation_class"] = str(project["validation_class"])
    extra = set(params) - {"t", "k", "v"}
    if extra:
        raise ConfigError(f"unknown access_params keys {sorted(extra)}")
    t = _positive("access_params.t", params.get("t", kw.get("access_distance_m", 500.0)))
    k = _positive("access_params.k", params.get("k", 5.0))
    v = _positive("access_params.v", params.get("v", 129842.0))
    kw["access_params"] = AccessParams(t, k, v)

    if "destinations" in data:
        queries = {}
        for cls, pairs in data["destinations"].items():
            if not pairs:
                raise ConfigError(f"destination class {cls!r} has no key-value queries")
            if any(not isinstance(p, (list, tuple)) or len(p) != 2 for p in pairs):
                raise ConfigError(f"destination class {cls!r}: each query must be a [key, value] pair")
            queries[str(cls)] = [[str(a), str(b)] for a, b in pairs]
        merged = {c: [list(p) for p in q] for c, q in DEFAULT_DESTINATIONS.items()}
        merged.update(queries)
        kw["destination_queries"] = merged

    raw_regions = data.get("regions")
    if not raw_regions:
        raise ConfigError("missing required key: regions")
    regions = [_region(r, i) for i, r in enumerate(raw_regions)]
    names = [r.name for r in regions]
    if len(set(names)) != len(names):
        raise ConfigError("region names must be unique")
    paths = data.get("paths", {})
    kw["input_dir"] = str(paths.get("input_dir", "."))
    kw["output_dir"] = str(paths.get("output_dir", "out"))
    return ProjectConfig(regions=regions, base_dir=base_dir, **kw)


def load_config(path) -> ProjectConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(data, path.parent)


def loads_config(text: str, base_dir: Path = Path(".")) -> ProjectConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return parse_config(data, base_dir)
