import gzip
import json
import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

from pedaccess.geometry.projection import Zone, project, unproject
from pedaccess.synthetic import ZONE, write_grid_city

DATA = Path(__file__).parent / "data"


def square_geojson(path, x0, y0, x1, y1, zone):
    ring = []
    for x, y in [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]:
        lat, lon = unproject(x, y, zone)
        ring.append([float(lon), float(lat)])
    Path(path).write_text(json.dumps({"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {}, "geometry": {"type": "Polygon", "coordinates": [ring]}}]}))
    return path


def add_region(config: Path, name: str, boundary: str, osm: str, raster: str, zone: int) -> None:
    with open(config, "a") as fh:
        fh.write(f'\n[[regions]]\nname = "{name}"\nboundary_mode = "custom"\nboundary_files = ["{boundary}"]\n'
                 f'osm_file = "{osm}"\npopulation_raster = "{raster}"\nutm_zone_override = {zone}\n')


@pytest.fixture
def small_city(tmp_path):
    """A 20 x 20 grid city with a small buffer; returns the config path."""
    cfg = write_grid_city(tmp_path / "city", n_side=20, n_pois=40, seed=1)
    text = cfg.read_text().replace("buffer_m = 1600", "buffer_m = 300")
    cfg.write_text(text)
    return cfg


@pytest.fixture
def two_city(small_city):
    """The small city plus an unpopulated copy whose hex frame is empty."""
    d = small_city.parent
    lines = (d / "gridville_pop.asc").read_text().splitlines()
    header, rows = lines[:6], lines[6:]
    zeros = [" ".join("0.0" for _ in r.split()) for r in rows]
    (d / "zero_pop.asc").write_text("\n".join(header + zeros) + "\n")
    add_region(small_city, "emptyville", "gridville_boundary.geojson", "gridville.osm", "zero_pop.asc",
               ZONE.number)
    return small_city


@pytest.fixture
def helsinki_inputs(tmp_path):
    """The bundled ~1 km² Helsinki extract with a boundary and a synthetic projected raster."""
    d = tmp_path / "helsinki"
    d.mkdir()
    with gzip.open(DATA / "helsinki_1km2.osm.gz", "rb") as src, open(d / "helsinki.osm", "wb") as dst:
        shutil.copyfileobj(src, dst)
    zone = Zone(35)
    xs, ys = project(np.array([60.1655, 60.1755]), np.array([24.9355, 24.9535]), zone)
    x0, x1 = sorted(np.asarray(xs).tolist())
    y0, y1 = sorted(np.asarray(ys).tolist())
    square_geojson(d / "boundary.geojson", x0 + 50, y0 + 50, x1 - 50, y1 - 50, zone)
    cell, margin = 100.0, 600.0
    xll, yll = float(np.floor(x0 - margin)), float(np.floor(y0 - margin))
    nx = int(np.ceil((x1 - x0 + 2 * margin) / cell))
    ny = int(np.ceil((y1 - y0 + 2 * margin) / cell))
    rng = np.random.default_rng(7)
    pop = np.round(rng.uniform(0, 80, (ny, nx)), 2)
    with open(d / "pop.asc", "w") as fh:
        fh.write(f"ncols {nx}\nnrows {ny}\nxllcorner {xll!r}\nyllcorner {yll!r}\ncellsize {cell!r}\n"
                 "NODATA_value -9999\n")
        for row in pop:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    cfg = d / "config.toml"
    cfg.write_text(
        "[project]\nbuffer_m = 200\n\n"
        f'[paths]\ninput_dir = "{d.as_posix()}"\noutput_dir = "{(d / "out").as_posix()}"\n\n'
        '[[regions]]\nname = "helsinki"\nboundary_mode = "custom"\nboundary_files = ["boundary.geojson"]\n'
        'osm_file = "helsinki.osm"\npopulation_raster = "pop.asc"\n')
    return cfg


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
