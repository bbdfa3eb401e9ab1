"""Hex- and city-level indicator frames and between-city standardisation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DataError
from .estimate import SampleEstimates, methods_for
from .scores import zscores

LOCAL = ("local_nh_population_density", "local_nh_intersection_density", "local_daily_living", "local_walkability")
POP_LOCAL = ("pop_nh_pop_density", "pop_nh_intersection_density", "pop_daily_living", "pop_walkability")
ALL_Z = ("all_cities_z_nh_population_density", "all_cities_z_nh_intersection_density",
         "all_cities_z_daily_living", "all_cities_walkability")
ALL_POP_Z = ("all_cities_pop_z_nh_population_density", "all_cities_pop_z_nh_intersection_density",
             "all_cities_pop_z_daily_living", "all_cities_pop_walkability")
HEX_COVARIATES = ("study_region", "hex_id", "pop_est", "pop_per_sqkm", "intersection_count",
                  "intersections_per_sqkm", "urban_sample_point_count")
CITY_COVARIATES = ("study_region", "area_sqkm", "pop_est", "pop_per_sqkm", "intersection_count",
                   "intersections_per_sqkm", "urban_sample_point_count")


def fmt_distance(d: float) -> str:
    return f"{d:g}"


def pct_column(distance: float, cls: str, method: str) -> str:
    return f"pct_access_{fmt_distance(distance)}m_{cls}_{method}"


def access_columns(distance: float, classes: Sequence[str], method: str) -> list[str]:
    return [pct_column(distance, c, m) for c in sorted(classes) for m in methods_for(method)]


def hex_columns(distance, classes, method) -> list[str]:
    return list(HEX_COVARIATES) + access_columns(distance, classes, method) + list(LOCAL) + list(ALL_Z)


def city_columns(distance, classes, method) -> list[str]:
    pct = access_columns(distance, classes, method)
    return (list(CITY_COVARIATES) + ["pop_" + c for c in pct] + list(POP_LOCAL) + pct + list(LOCAL)
            + list(ALL_Z) + list(ALL_POP_Z))


@dataclass
class IndicatorFrame:
    """Ordered named columns of equal length; NaN marks an undefined value."""

    level: str
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    flags: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __setitem__(self, name: str, values) -> None:
        self.columns[name] = np.asarray(values)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def rows(self):
        names = self.names
        for i in range(len(self)):
            yield {n: self.columns[n][i] for n in names}


def _group_mean(hex_idx: np.ndarray, n_groups: int, values: np.ndarray) -> np.ndarray:
    sums = np.bincount(hex_idx, weights=values, minlength=n_groups)
    counts = np.bincount(hex_idx, minlength=n_groups)
    return sums / counts


def aggregate_hex(est: SampleEstimates, grid, region: str, distance: float, method: str) -> IndicatorFrame:
    """Average sample-point estimates within each hexagon that holds any points.

    Access percentages for the binary method are the share of points with
    access; other methods report the mean score, on the same 0-100 scale.
    """
    classes = sorted(est.scores)
    hexes = np.unique(est.points.hex)
    if len(hexes) and hexes[0] < 0:
        raise DataError("sample points without a hex assignment")
    idx = np.searchsorted(hexes, est.points.hex)
    n = len(hexes)
    cells = [grid[int(h)] for h in hexes]
    area = np.array([c.area_km2 for c in cells])
    pop = np.array([c.population for c in cells], dtype=float)
    inter = np.array([c.intersection_count for c in cells], dtype=np.int64)
    f = IndicatorFrame("hex")
    f["study_region"] = np.array([region] * n, dtype=object)
    f["hex_id"] = hexes.astype(np.int64)
    f["pop_est"] = pop
    f["pop_per_sqkm"] = pop / area
    f["intersection_count"] = inter
    f["intersections_per_sqkm"] = inter / area
    f["urban_sample_point_count"] = np.bincount(idx, minlength=n).astype(np.int64)
    for cls in classes:
        for m in methods_for(method):
            f[pct_column(distance, cls, m)] = 100.0 * _group_mean(idx, n, est.scores[cls][m])
    for name, vals in zip(LOCAL, (est.nh_population_density, est.nh_intersection_density,
                                  est.daily_living.astype(float), est.walkability)):
        f[name] = _group_mean(idx, n, vals) if n else np.empty(0)
    for name in ALL_Z:
        f[name] = np.full(n, np.nan)
    return f


def weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise DataError("total population weight is zero")
    use = weights > 0
    return float(np.sum(values[use] * weights[use]) / total)


def aggregate_city(hexf: IndicatorFrame, region: str, area_km2: float, pop_est: float,
                   intersection_count: int, distance: float, classes: Sequence[str], method: str) -> IndicatorFrame:
    """One city row: covariates, population-weighted and unweighted hex means.

    Between-city columns are created empty and filled by
    :func:`between_city_z`. A region without hexes yields a row whose
    indicator values are all undefined.
    """
    f = IndicatorFrame("city")
    pct = access_columns(distance, classes, method)
    f["study_region"] = np.array([region], dtype=object)
    f["area_sqkm"] = np.array([area_km2])
    f["pop_est"] = np.array([pop_est])
    f["pop_per_sqkm"] = np.array([pop_est / area_km2 if area_km2 > 0 else np.nan])
    f["intersection_count"] = np.array([intersection_count], dtype=np.int64)
    f["intersections_per_sqkm"] = np.array([intersection_count / area_km2 if area_km2 > 0 else np.nan])
    n_points = int(hexf["urban_sample_point_count"].sum()) if len(hexf) else 0
    f["urban_sample_point_count"] = np.array([n_points], dtype=np.int64)
    empty = len(hexf) == 0
    w = hexf["pop_est"] if not empty else None
    for c in pct:
        f["pop_" + c] = np.array([np.nan if empty else weighted_mean(hexf[c], w)])
    for pname, lname in zip(POP_LOCAL, LOCAL):
        f[pname] = np.array([np.nan if empty else weighted_mean(hexf[lname], w)])
    for c in pct + list(LOCAL):
        f[c] = np.array([np.nan if empty else float(np.mean(hexf[c]))])
    for c in ALL_Z + ALL_POP_Z:
        f[c] = np.array([np.nan])
    return f


def between_city_z(hex_frames: Sequence[IndicatorFrame], city_frames: Sequence[IndicatorFrame]) -> dict[str, int]:
    """Standardise hex-level local indicators over all regions' hexes pooled.

    Fills the ``all_cities_*`` columns in place and returns diagnostic flags
    (degenerate pools produce zeros, too-small pools leave values undefined).
    """
    flags: dict[str, int] = {}
    sizes = [len(h) for h in hex_frames]
    total = sum(sizes)
    if total < 2:
        flags["pooled_z_undefined"] = 1
        return flags
    bounds = np.cumsum([0] + sizes)
    zs = []
    for src, dst in zip(LOCAL[:3], ALL_Z[:3]):
        pooled = np.concatenate([h[src] for h in hex_frames]).astype(float)
        z, flat = zscores(pooled)
        if flat:
            flags[f"{dst}_constant"] = 1
        zs.append(z)
    walk = zs[0] + zs[1] + zs[2]
    for k, (h, city) in enumerate(zip(hex_frames, city_frames)):
        a, b = bounds[k], bounds[k + 1]
        for name, vals in zip(ALL_Z, zs + [walk]):
            h[name] = vals[a:b]
        if b == a:
            continue
        w = h["pop_est"]
        for name, pname in zip(ALL_Z, ALL_POP_Z):
            city[name] = np.array([float(np.mean(h[name]))])
            city[pname] = np.array([weighted_mean(h[name], w)])
    return flags
