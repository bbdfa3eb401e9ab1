"""Streaming readers for OSM XML and the binary PBF interchange format.

Both readers yield :class:`OsmElement` records. :class:`OsmStream` wraps a
file and makes two passes over it: nodes first (building the coordinate
table), then ways and relations, so way geometry resolves regardless of
element order in the file. Only the coordinate table is held in memory.
"""
from __future__ import annotations

import bz2
import gzip
import struct
import xml.etree.ElementTree as ET
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from ..errors import OsmParseError

NODE, WAY, RELATION = "node", "way", "relation"


@dataclass
class OsmElement:
    id: int
    kind: str
    tags: dict[str, str] = field(default_factory=dict)
    lat: float | None = None
    lon: float | None = None
    refs: tuple[int, ...] = ()
    members: tuple[tuple[str, int, str], ...] = ()
    coords: tuple[tuple[float, float], ...] = ()  # (lat, lon) per ref, ways only

    def key(self):
        """Comparable identity used for multiset equality across formats."""
        geom = (round(self.lat, 7), round(self.lon, 7)) if self.kind == NODE else (self.refs, self.members)
        return (self.kind, self.id, tuple(sorted(self.tags.items())), geom)

    @property
    def is_closed(self) -> bool:
        return self.kind == WAY and len(self.refs) >= 4 and self.refs[0] == self.refs[-1]


def _open(path: Path):
    name = path.name.lower()
    if name.endswith(".gz"):
        return gzip.open(path, "rb")
    if name.endswith(".bz2"):
        return bz2.open(path, "rb")
    return open(path, "rb")


def is_pbf(path) -> bool:
    return str(path).lower().endswith(".pbf")


# ---------------------------------------------------------------- XML


def iter_xml(path) -> Iterator[OsmElement]:
    path = Path(path)
    try:
        with _open(path) as fh:
            current = None
            for event, elem in ET.iterparse(fh, events=("start", "end")):
                tag = elem.tag
                if event == "start":
                    if tag in (NODE, WAY, RELATION):
                        current = {"tags": {}, "refs": [], "members": []}
                    continue
                if tag == "tag" and current is not None:
                    current["tags"][elem.get("k")] = elem.get("v")
                elif tag == "nd" and current is not None:
                    current["refs"].append(int(elem.get("ref")))
                elif tag == "member" and current is not None:
                    current["members"].append((elem.get("type"), int(elem.get("ref")), elem.get("role") or ""))
                elif tag in (NODE, WAY, RELATION):
                    eid = int(elem.get("id"))
                    if tag == NODE:
                        lat, lon = elem.get("lat"), elem.get("lon")
                        if lat is None or lon is None:
                            # deleted/placeholder node without a location
                            elem.clear()
                            current = None
                            continue
                        yield OsmElement(eid, NODE, current["tags"], float(lat), float(lon))
                    elif tag == WAY:
                        yield OsmElement(eid, WAY, current["tags"], refs=tuple(current["refs"]))
                    else:
                        yield OsmElement(eid, RELATION, current["tags"], members=tuple(current["members"]))
                    current = None
                    elem.clear()
                elif tag == "osm":
                    elem.clear()
    except ET.ParseError as exc:
        raise OsmParseError(f"malformed OSM XML in {path}: {exc}") from exc


# ---------------------------------------------------------------- PBF
# Minimal protobuf wire-format decoding for the OSM PBF schema
# (fileformat.proto + osmformat.proto).


def _varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        b = buf[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if b < 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise OsmParseError("varint too long")


def _fields(buf: bytes) -> Iterator[tuple[int, int, object]]:
    """Yield ``(field_number, wire_type, value)``; length-delimited values are bytes."""
    pos, end = 0, len(buf)
    while pos < end:
        key, pos = _varint(buf, pos)
        fnum, wtype = key >> 3, key & 7
        if wtype == 0:
            val, pos = _varint(buf, pos)
        elif wtype == 2:
            ln, pos = _varint(buf, pos)
            val = buf[pos:pos + ln]
            if len(val) != ln:
                raise OsmParseError("truncated length-delimited field")
            pos += ln
        elif wtype == 1:
            val = buf[pos:pos + 8]
            pos += 8
        elif wtype == 5:
            val = buf[pos:pos + 4]
            pos += 4
        else:
            raise OsmParseError(f"unsupported wire type {wtype}")
        yield fnum, wtype, val


def _packed(buf: bytes) -> list[int]:
    out = []
    pos, end = 0, len(buf)
    append = out.append
    while pos < end:
        # inline varint decode; this loop dominates PBF parsing time
        b = buf[pos]
        pos += 1
        if b < 0x80:
            append(b)
            continue
        result = b & 0x7F
        shift = 7
        while True:
            b = buf[pos]
            pos += 1
            result |= (b & 0x7F) << shift
            if b < 0x80:
                break
            shift += 7
        append(result)
    return out


def _zz(n: int) -> int:
    return (n >> 1) ^ -(n & 1)


def _signed64(n: int) -> int:
    return n - (1 << 64) if n >= (1 << 63) else n


def _delta(values: list[int]) -> list[int]:
    out = []
    acc = 0
    for v in values:
        acc += _zz(v)
        out.append(acc)
    return out


def _read_blobs(path: Path) -> Iterator[tuple[str, bytes]]:
    with _open(path) as fh:
        while True:
            head = fh.read(4)
            if not head:
                return
            if len(head) != 4:
                raise OsmParseError("truncated blob header length")
            (hlen,) = struct.unpack(">I", head)
            header = fh.read(hlen)
            btype, dsize = None, None
            for fnum, _, val in _fields(header):
                if fnum == 1:
                    btype = val.decode()
                elif fnum == 3:
                    dsize = val
            if btype is None or dsize is None:
                raise OsmParseError("malformed BlobHeader")
            blob = fh.read(dsize)
            if len(blob) != dsize:
                raise OsmParseError("truncated blob")
            raw = None
            for fnum, _, val in _fields(blob):
                if fnum == 1:
                    raw = bytes(val)
                elif fnum == 3:
                    raw = zlib.decompress(val)
                elif fnum in (4, 5, 6, 7):
                    raise OsmParseError("only raw and zlib-compressed PBF blobs are supported")
            if raw is None:
                raise OsmParseError("blob without data")
            yield btype, raw


def _tags(keys, vals, strings) -> dict[str, str]:
    return {strings[k]: strings[v] for k, v in zip(keys, vals)}


def _decode_block(data: bytes, kinds: set[str]) -> Iterator[OsmElement]:
    strings: list[str] = []
    groups = []
    gran, lat_off, lon_off = 100, 0, 0
    for fnum, _, val in _fields(data):
        if fnum == 1:
            strings = [s.decode("utf-8") for f, _, s in _fields(val) if f == 1]
        elif fnum == 2:
            groups.append(val)
        elif fnum == 17:
            gran = val
        elif fnum == 19:
            lat_off = _signed64(val)
        elif fnum == 20:
            lon_off = _signed64(val)

    def coord(v, off):
        return (off + gran * v) * 1e-9

    for group in groups:
        for fnum, _, val in _fields(group):
            if fnum == 1 and NODE in kinds:
                nid, keys, vals, lat, lon = 0, [], [], 0, 0
                for f, _, v in _fields(val):
                    if f == 1:
                        nid = _zz(v)
                    elif f == 2:
                        keys = _packed(v)
                    elif f == 3:
                        vals = _packed(v)
                    elif f == 8:
                        lat = _zz(v)
                    elif f == 9:
                        lon = _zz(v)
                yield OsmElement(nid, NODE, _tags(keys, vals, strings),
                                 round(coord(lat, lat_off), 9), round(coord(lon, lon_off), 9))
            elif fnum == 2 and NODE in kinds:
                ids, lats, lons, kv = [], [], [], []
                for f, _, v in _fields(val):
                    if f == 1:
                        ids = _delta(_packed(v))
                    elif f == 8:
                        lats = _delta(_packed(v))
                    elif f == 9:
                        lons = _delta(_packed(v))
                    elif f == 10:
                        kv = _packed(v)
                pos = 0
                for i, nid in enumerate(ids):
                    tags = {}
                    if kv:
                        while kv[pos] != 0:
                            tags[strings[kv[pos]]] = strings[kv[pos + 1]]
                            pos += 2
                        pos += 1
                    yield OsmElement(nid, NODE, tags,
                                     round(coord(lats[i], lat_off), 9), round(coord(lons[i], lon_off), 9))
            elif fnum == 3 and WAY in kinds:
                wid, keys, vals, refs = 0, [], [], []
                for f, _, v in _fields(val):
                    if f == 1:
                        wid = v
                    elif f == 2:
                        keys = _packed(v)
                    elif f == 3:
                        vals = _packed(v)
                    elif f == 8:
                        refs = _delta(_packed(v))
                yield OsmElement(wid, WAY, _tags(keys, vals, strings), refs=tuple(refs))
            elif fnum == 4 and RELATION in kinds:
                rid, keys, vals, roles, memids, types = 0, [], [], [], [], []
                for f, _, v in _fields(val):
                    if f == 1:
                        rid = v
                    elif f == 2:
                        keys = _packed(v)
                    elif f == 3:
                        vals = _packed(v)
                    elif f == 8:
                        roles = _packed(v)
                    elif f == 9:
                        memids = _delta(_packed(v))
                    elif f == 10:
                        types = _packed(v)
                names = (NODE, WAY, RELATION)
                members = tuple((names[t], m, strings[r]) for t, m, r in zip(types, memids, roles))
                yield OsmElement(rid, RELATION, _tags(keys, vals, strings), members=members)


def iter_pbf(path, kinds=(NODE, WAY, RELATION)) -> Iterator[OsmElement]:
    path = Path(path)
    kinds = set(kinds)
    try:
        for btype, raw in _read_blobs(path):
            if btype == "OSMHeader":
                for fnum, _, val in _fields(raw):
                    if fnum == 4:
                        feat = val.decode()
                        if feat not in ("OsmSchema-V0.6", "DenseNodes", "HistoricalInformation"):
                            raise OsmParseError(f"unsupported required feature {feat}")
            elif btype == "OSMData":
                yield from _decode_block(raw, kinds)
    except (IndexError, UnicodeDecodeError, zlib.error, struct.error) as exc:
        raise OsmParseError(f"malformed PBF file {path}: {exc}") from exc


def iter_elements(path, kinds=(NODE, WAY, RELATION)) -> Iterator[OsmElement]:
    """Raw element stream in file order, without way resolution."""
    if is_pbf(path):
        yield from iter_pbf(path, kinds)
    else:
        kinds = set(kinds)
        for el in iter_xml(path):
            if el.kind in kinds:
                yield el


class OsmStream:
    """Re-iterable element stream with way geometry resolved.

    Iterating yields every node, then every way whose node references all
    resolve (with ``coords`` filled in), then every relation. Ways with
    missing node references are dropped and counted in ``diagnostics``.
    """

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise OsmParseError(f"OSM file not found: {self.path}")
        self.diagnostics: dict[str, int] = {}

    def __iter__(self) -> Iterator[OsmElement]:
        diag = {"nodes": 0, "ways": 0, "relations": 0, "ways_missing_nodes": 0, "ways_degenerate": 0}
        coords: dict[int, tuple[float, float]] = {}
        for el in iter_elements(self.path, (NODE,)):
            coords[el.id] = (el.lat, el.lon)
            diag["nodes"] += 1
            yield el
        for el in iter_elements(self.path, (WAY, RELATION)):
            if el.kind == WAY:
                try:
                    el.coords = tuple(coords[r] for r in el.refs)
                except KeyError:
                    diag["ways_missing_nodes"] += 1
                    continue
                if len(el.refs) < 2:
                    diag["ways_degenerate"] += 1
                    continue
                diag["ways"] += 1
            else:
                diag["relations"] += 1
            yield el
        self.diagnostics = diag


def parse_osm(path) -> OsmStream:
    return OsmStream(path)
