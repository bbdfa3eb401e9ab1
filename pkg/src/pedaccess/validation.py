"""Comparison of OSM-derived layers with official reference layers."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .geometry.index import GridIndex
from .geometry.shapes import segment_distance


@dataclass
class OverlapReport:
    total_len_osm: float
    total_len_official: float
    pct_official_within: dict[float, float]


@dataclass
class HexTruthReport:
    pct_true_condition: float
    avg_weight_osm_all: float
    avg_weight_official_all: float
    avg_weight_osm_true: float
    avg_weight_official_true: float
    per_hex: dict[str, np.ndarray]


@dataclass
class GroundTruthSample:
    destination_id: str
    cls: str
    x: float
    y: float
    density: float
    quintile: int


def _lines(lines) -> list[np.ndarray]:
    out = []
    for ln in lines:
        a = np.asarray(ln, dtype=float).reshape(-1, 2)
        if len(a) >= 2:
            out.append(a)
    return out


def _length(lines) -> float:
    return float(sum(np.hypot(*np.diff(a, axis=0).T).sum() for a in lines))


def discretize(lines, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample points at the middle of equal pieces no longer than ``step``, with piece lengths as weights."""
    pts, wts = [], []
    for a in lines:
        seg = np.hypot(*np.diff(a, axis=0).T)
        for (x0, y0), (x1, y1), ln in zip(a[:-1], a[1:], seg):
            if ln == 0:
                continue
            k = max(1, math.ceil(ln / step))
            t = (np.arange(k) + 0.5) / k
            pts.append(np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]))
            wts.append(np.full(k, ln / k))
    if not pts:
        return np.empty((0, 2)), np.empty(0)
    return np.vstack(pts), np.concatenate(wts)


class SegmentIndex:
    """Square-cell buckets of line segments for bounded nearest-segment distance."""

    def __init__(self, lines, cell: float):
        segs = [np.hstack([a[:-1], a[1:]]) for a in lines]
        self.segs = np.vstack(segs) if segs else np.empty((0, 4))
        self.cell = float(cell)
        buckets = defaultdict(list)
        lo = np.floor(np.minimum(self.segs[:, :2], self.segs[:, 2:]) / self.cell).astype(np.int64)
        hi = np.floor(np.maximum(self.segs[:, :2], self.segs[:, 2:]) / self.cell).astype(np.int64)
        for k, ((i0, j0), (i1, j1)) in enumerate(zip(lo.tolist(), hi.tolist())):
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    buckets[(i, j)].append(k)
        self.buckets = {key: np.array(v, dtype=np.int64) for key, v in buckets.items()}

    def distance(self, xy: np.ndarray) -> np.ndarray:
        """Distance to the nearest segment; ``inf`` when none lies within one cell."""
        out = np.full(len(xy), np.inf)
        cells = np.floor(xy / self.cell).astype(np.int64)
        groups = defaultdict(list)
        for n, (i, j) in enumerate(cells.tolist()):
            groups[(i, j)].append(n)
        for (i, j), members in groups.items():
            cand = [self.buckets[k] for di in (-1, 0, 1) for dj in (-1, 0, 1)
                    if (k := (i + di, j + dj)) in self.buckets]
            if not cand:
                continue
            segs = self.segs[np.unique(np.concatenate(cand))]
            m = np.array(members)
            out[m] = segment_distance(xy[m, 0], xy[m, 1], segs)
        return out


def edge_overlap(osm_lines, official_lines, radii: Sequence[float] = (10.0, 50.0),
                 step: float = 1.0) -> OverlapReport:
    """Share of official network length lying within each radius of an OSM edge."""
    if step <= 0:
        raise DataError("discretisation step must be positive")
    osm, official = _lines(osm_lines), _lines(official_lines)
    total_off = _length(official)
    if not official or total_off == 0:
        raise DataError("official edge layer is empty")
    pts, wts = discretize(official, step)
    radii = sorted(float(r) for r in radii)
    if osm:
        d = SegmentIndex(osm, max(max(radii), 1.0)).distance(pts)
    else:
        d = np.full(len(pts), np.inf)
    pct = {r: float(100.0 * wts[d <= r].sum() / wts.sum()) for r in radii}
    return OverlapReport(_length(osm), total_off, pct)


def destination_overlap(a_xy, b_xy, radius: float) -> tuple[float | None, float | None]:
    """Percent of A whose buffer meets a buffer of B, and vice versa.

    Equal circular buffers of radius r intersect exactly when their centers
    are at most 2r apart. An empty set gives ``None`` (not applicable).
    """
    a = np.asarray(a_xy, dtype=float).reshape(-1, 2)
    b = np.asarray(b_xy, dtype=float).reshape(-1, 2)

    def pct(src, dst):
        if len(src) == 0:
            return None
        if len(dst) == 0:
            return 0.0
        index = GridIndex(dst, cell_size=max(2 * radius, 1.0))
        hits = sum(index.nearest_within(x, y, 2 * radius) is not None for x, y in src.tolist())
        return 100.0 * hits / len(src)

    return pct(a, b), pct(b, a)


def hex_truth_stats(osm_xy, official_xy, grid) -> HexTruthReport:
    """Per-hex agreement between two destination layers and summary percentages.

    A hex is in the true condition when both layers have points in it or
    neither does. Weights are each layer's share of the points in the hex.
    """
    n = len(grid)

    def counts(xy):
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        c = np.zeros(n, dtype=np.int64)
        if len(xy):
            ids = grid.locate(xy[:, 0], xy[:, 1])
            np.add.at(c, ids[ids >= 0], 1)
        return c

    co, cf = counts(osm_xy), counts(official_xy)
    total = co + cf
    with np.errstate(invalid="ignore", divide="ignore"):
        wo = np.where(total > 0, co / total, 0.0)
        wf = np.where(total > 0, cf / total, 0.0)
    true = (co > 0) == (cf > 0)

    def mean(v, mask=None):
        v = v if mask is None else v[mask]
        return float(100.0 * v.mean()) if len(v) else 0.0

    per_hex = {"hex_id": np.arange(n), "osm_count": co, "official_count": cf,
               "true_condition": true, "w_osm": wo, "w_official": wf}
    return HexTruthReport(mean(true.astype(float)), mean(wo), mean(wf), mean(wo, true), mean(wf, true), per_hex)


def quintile_sample(ids: Sequence[str], classes: Sequence[str], xy, densities, n_per_quintile: int = 10,
                    seed: int = 0) -> list[GroundTruthSample]:
    """Random destinations per population-density quintile for manual review."""
    dens = np.asarray(densities, dtype=float)
    if len(dens) == 0:
        raise DataError("no destinations to sample")
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    breaks = np.percentile(dens, [20, 40, 60, 80])
    quint = np.digitize(dens, breaks, right=True) + 1
    rng = np.random.default_rng(seed)
    out = []
    for q in range(1, 6):
        members = np.flatnonzero(quint == q)
        take = min(n_per_quintile, len(members))
        chosen = np.sort(rng.choice(members, size=take, replace=False)) if take else []
        for i in chosen:
            out.append(GroundTruthSample(str(ids[i]), str(classes[i]), float(xy[i, 0]), float(xy[i, 1]),
                                         float(dens[i]), q))
    return out


SAMPLE_FIELDS = ["destination_id", "class", "x", "y", "lat", "lon", "density", "quintile",
                 "maps", "satellite", "street"]


def write_sample_csv(path, rows: Sequence[GroundTruthSample], zone=None) -> None:
    """Review sheet; reviewers fill the maps/satellite/street columns with T, F or blank."""
    from .geometry.projection import unproject
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_FIELDS)
        for r in rows:
            lat, lon = unproject(r.x, r.y, zone) if zone is not None else ("", "")
            w.writerow([r.destination_id, r.cls, repr(r.x), repr(r.y), repr(float(lat)) if lat != "" else "",
                        repr(float(lon)) if lon != "" else "", repr(r.density), r.quintile, "", "", ""])


def ground_truth_verdict(maps: bool, satellite: bool, street: bool | None) -> bool:
    """Majority of three sources; without street imagery both remaining sources must agree."""
    if street is None:
        return bool(maps and satellite)
    return (int(maps) + int(satellite) + int(street)) >= 2


def _flag(text: str) -> bool | None:
    t = text.strip().upper()
    if t in ("T", "TRUE", "1", "Y", "YES"):
        return True
    if t in ("F", "FALSE", "0", "N", "NO"):
        return False
    return None


def tally_verdicts(path) -> dict[str, int]:
    """Count true/false verdicts in a reviewed sampling sheet, per quintile and overall."""
    tally: dict[str, int] = defaultdict(int)
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            maps, sat = _flag(row.get("maps", "")), _flag(row.get("satellite", ""))
            if maps is None or sat is None:
                tally["unreviewed"] += 1
                continue
            v = ground_truth_verdict(maps, sat, _flag(row.get("street", "")))
            key = "true" if v else "false"
            tally[key] += 1
            tally[f"q{row.get('quintile', '?')}_{key}"] += 1
    return dict(tally)
