"""GTFS schedule reading, public transport stops as destinations, stop headways."""
from __future__ import annotations

import csv
import datetime as dt
import io
import zipfile
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..geometry.index import GridIndex
from ..geometry.projection import Zone, project
from ..geometry.shapes import in_buffered_region
from ..osm.pois import PoiSet

PT_CLASS = "pt_any"
DEDUP_M = 10.0
_WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")


@dataclass
class Stop:
    id: str
    name: str
    lat: float
    lon: float


@dataclass
class Service:
    days: tuple[bool, ...]  # Monday first
    start: dt.date
    end: dt.date
    added: set = field(default_factory=set)
    removed: set = field(default_factory=set)

    def runs_on(self, day: dt.date) -> bool:
        if day in self.removed:
            return False
        if day in self.added:
            return True
        return self.start <= day <= self.end and self.days[day.weekday()]


@dataclass
class GtfsFeed:
    stops: dict[str, Stop] = field(default_factory=dict)
    trips: dict[str, tuple[str, str]] = field(default_factory=dict)  # trip -> (route, service)
    stop_times: dict[str, list[tuple[str, int]]] = field(default_factory=dict)  # trip -> [(stop, dep s)]
    calendar: dict[str, Service] = field(default_factory=dict)
    diagnostics: dict[str, int] = field(default_factory=dict)

    def departures(self, stop_id: str) -> list[tuple[str, int]]:
        """``(service_id, seconds)`` for every scheduled departure at ``stop_id``."""
        if stop_id not in self.stops:
            raise DataError(f"unknown stop id {stop_id!r}")
        out = []
        for trip, times in self.stop_times.items():
            service = self.trips[trip][1]
            out.extend((service, t) for s, t in times if s == stop_id)
        return out


def parse_time(text: str) -> int:
    """``H:MM:SS`` to seconds after service-day midnight; hours may exceed 23."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValueError(f"bad GTFS time {text!r}")
    h, m, s = (int(p) for p in parts)
    if h < 0 or not (0 <= m < 60 and 0 <= s < 61):
        raise ValueError(f"bad GTFS time {text!r}")
    return h * 3600 + m * 60 + s


def _date(text: str) -> dt.date:
    return dt.datetime.strptime(text.strip(), "%Y%m%d").date()


def _open_tables(path: Path):
    if path.is_dir():
        def read(name):
            p = path / name
            return p.read_text(encoding="utf-8-sig") if p.exists() else None
        return read
    if zipfile.is_zipfile(path):
        zf = zipfile.ZipFile(path)
        names = {Path(n).name: n for n in zf.namelist()}

        def read(name):
            if name not in names:
                return None
            return zf.read(names[name]).decode("utf-8-sig")
        return read
    raise DataError(f"GTFS feed must be a directory or zip archive: {path}")


def _rows(text):
    reader = csv.DictReader(io.StringIO(text))
    for row in reader:
        yield {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}


def read_gtfs(path) -> GtfsFeed:
    """Load stops, trips, stop times and calendar, enforcing referential integrity.

    Rows that reference unknown trips or stops, stops with unparseable
    coordinates and trips whose departures go backwards are dropped and
    counted in ``diagnostics``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"GTFS feed not found: {path}")
    read = _open_tables(path)
    feed = GtfsFeed()
    diag = defaultdict(int)

    for name in ("stops.txt", "trips.txt", "stop_times.txt"):
        if read(name) is None:
            raise DataError(f"GTFS feed missing {name}")

    for row in _rows(read("stops.txt")):
        try:
            lat, lon = float(row["stop_lat"]), float(row["stop_lon"])
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                raise ValueError
        except (KeyError, ValueError):
            diag["stops_bad_coordinates"] += 1
            continue
        feed.stops[row["stop_id"]] = Stop(row["stop_id"], row.get("stop_name", ""), lat, lon)

    cal = read("calendar.txt")
    if cal:
        for row in _rows(cal):
            try:
                days = tuple(row[d] == "1" for d in _WEEKDAYS)
                feed.calendar[row["service_id"]] = Service(days, _date(row["start_date"]), _date(row["end_date"]))
            except (KeyError, ValueError):
                diag["calendar_bad_rows"] += 1
    extra = read("calendar_dates.txt")
    if extra:
        for row in _rows(extra):
            try:
                sid, day, kind = row["service_id"], _date(row["date"]), row["exception_type"]
            except (KeyError, ValueError):
                diag["calendar_bad_rows"] += 1
                continue
            svc = feed.calendar.setdefault(sid, Service((False,) * 7, dt.date.max, dt.date.min))
            (svc.added if kind == "1" else svc.removed).add(day)

    for row in _rows(read("trips.txt")):
        feed.trips[row["trip_id"]] = (row.get("route_id", ""), row.get("service_id", ""))

    raw: dict[str, list[tuple[int, str, int]]] = defaultdict(list)
    for row in _rows(read("stop_times.txt")):
        trip, stop = row.get("trip_id", ""), row.get("stop_id", "")
        if trip not in feed.trips or stop not in feed.stops:
            diag["stop_times_dangling"] += 1
            continue
        text = row.get("departure_time") or row.get("arrival_time")
        if not text:
            diag["stop_times_untimed"] += 1
            continue
        try:
            seq = int(row.get("stop_sequence", "0"))
            raw[trip].append((seq, stop, parse_time(text)))
        except ValueError:
            diag["stop_times_bad_time"] += 1

    for trip in sorted(raw):
        rows = sorted(raw[trip])
        times = [t for _, _, t in rows]
        if any(b < a for a, b in zip(times, times[1:])):
            diag["trips_decreasing_times"] += 1
            continue
        feed.stop_times[trip] = [(s, t) for _, s, t in rows]
    feed.diagnostics = dict(diag)
    return feed


def gtfs_stops_as_pois(feed: GtfsFeed, region, buffer: float, zone: Zone,
                       osm_pt: PoiSet | None = None, dedup_m: float = DEDUP_M) -> PoiSet:
    """Stops within the buffered region as ``pt_any`` destinations.

    OSM public transport points are kept as given; a GTFS stop within
    ``dedup_m`` of an already retained point is treated as the same stop.
    """
    out = PoiSet(PT_CLASS)
    if osm_pt is not None and len(osm_pt):
        out.ids = list(osm_pt.ids)
        out.xy = np.array(osm_pt.xy, dtype=float)
        out.tags = list(osm_pt.tags)
    stops = [feed.stops[k] for k in sorted(feed.stops)]
    if not stops:
        return out
    x, y = project(np.array([s.lat for s in stops]), np.array([s.lon for s in stops]), zone)
    x, y = np.atleast_1d(x), np.atleast_1d(y)
    inside = np.atleast_1d(in_buffered_region(x, y, region, buffer))
    index = GridIndex(out.xy, cell_size=max(dedup_m, 1.0)) if len(out) else None
    new_xy = []
    for s, px, py, ok in zip(stops, x, y, inside):
        if not ok:
            continue
        if index is not None and index.nearest_within(px, py, dedup_m) is not None:
            continue
        if any(np.hypot(px - qx, py - qy) <= dedup_m for qx, qy in new_xy):
            continue
        new_xy.append((px, py))
        out.ids.append(f"gtfs:{s.id}")
        out.tags.append({"gtfs_stop_id": s.id, "name": s.name})
    if new_xy:
        out.xy = np.vstack([out.xy.reshape(-1, 2), np.array(new_xy)])
    return out


def stop_average_headway(feed: GtfsFeed, stop_id: str, start_date: dt.date, end_date: dt.date,
                         start_s: int, end_s: int) -> float | None:
    """Mean gap in minutes between departures at a stop on its busiest day.

    Each date in ``[start_date, end_date]`` is scored by the number of
    departures inside ``[start_s, end_s]``; the busiest date (earliest on a
    tie) is used. Returns ``None`` with fewer than two departures.
    """
    if end_date < start_date or end_s < start_s:
        raise DataError("empty day or time window")
    deps = feed.departures(stop_id)
    best: list[int] = []
    day = start_date
    while day <= end_date:
        times = sorted(t for svc, t in deps
                       if start_s <= t <= end_s and svc in feed.calendar and feed.calendar[svc].runs_on(day))
        if len(times) > len(best):
            best = times
        day += dt.timedelta(days=1)
    if len(best) < 2:
        return None
    return float(np.mean(np.diff(best))) / 60.0
