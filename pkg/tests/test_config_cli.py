import csv
import json

import numpy as np
import pytest

from pedaccess.cli import main
from pedaccess.config import load_config, loads_config
from pedaccess.errors import ConfigError, StageError
from pedaccess.indicators.aggregate import ALL_POP_Z, ALL_Z, CITY_COVARIATES, HEX_COVARIATES, LOCAL, POP_LOCAL
from pedaccess.outputs import write_feature_collection, write_table
from pedaccess.pipeline import run_pipeline

MINIMAL = """
[[regions]]
name = "town"
boundary_files = ["town.geojson"]
"""


def test_defaults():
    cfg = loads_config(MINIMAL)
    got = (cfg.sample_interval_m, cfg.hex_diagonal_m, cfg.neighborhood_distance_m, cfg.access_distance_m,
           cfg.buffer_m, cfg.pop_threshold)
    assert got == (30, 250, 1000, 500, 1600, 5)
    assert cfg.access_method == "binary"
    assert cfg.access_params.t == 500 and cfg.access_params.k == 5 and cfg.access_params.v == 129842
    assert cfg.regions[0].boundary_mode == "custom"
    assert all(cfg.destination_queries[c] for c in ("fresh_food_market", "convenience", "pt_any"))


def test_access_t_follows_distance():
    cfg = loads_config("[project]\naccess_distance_m = 800\n" + MINIMAL)
    assert cfg.access_params.t == 800


@pytest.mark.parametrize("snippet, message", [
    ("[project]\naccess_distance_m = 0\n", "non-positive length"),
    ("[project]\nhex_diagonal_m = -5\n", "non-positive length"),
    ('[project]\naccess_method = "linear"\n', "unknown access_method"),
    ("[project]\npop_threshold = -1\n", "pop_threshold"),
    ("[project]\nsample_spacing = 10\n", "unknown [project] keys"),
])
def test_invalid_project(snippet, message):
    with pytest.raises(ConfigError, match=message.replace("[", r"\[")):
        loads_config(snippet + MINIMAL)


@pytest.mark.parametrize("regions, message", [
    ('[[regions]]\nboundary_files = ["a.geojson"]\n', "missing required key"),
    ('[[regions]]\nname = "a"\n', "missing required key"),
    ('[[regions]]\nname = "a"\nboundary_mode = "intersection"\nboundary_files = ["a.geojson"]\n', "exactly 2"),
    ('[[regions]]\nname = "a"\nboundary_mode = "ucdb_only"\nboundary_files = ["a", "b"]\n', "exactly 1"),
    ('[[regions]]\nname = "a"\nboundary_files = ["a"]\n[[regions]]\nname = "a"\nboundary_files = ["b"]\n',
     "unique"),
    ("", "missing required key: regions"),
])
def test_invalid_regions(regions, message):
    with pytest.raises(ConfigError, match=message):
        loads_config(regions)


def test_empty_destination_class():
    with pytest.raises(ConfigError, match="no key-value"):
        loads_config("[destinations]\nbakery = []\n" + MINIMAL)


def test_round_trip_fixed_point():
    text = loads_config(MINIMAL).dumps()
    again = loads_config(text)
    assert again.dumps() == text
    assert again == loads_config(MINIMAL)


def test_round_trip_generated_config(small_city):
    cfg = load_config(small_city)
    assert loads_config(cfg.dumps(), small_city.parent).dumps() == cfg.dumps()


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[project\nx=")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(p)


# ------------------------------------------------------------------ pipeline


def test_ingest_only_manifest(small_city, tmp_path):
    cfg = load_config(small_city)
    out = tmp_path / "o"
    m = run_pipeline(cfg, {"ingest"}, out=out)
    names = {k.split("/")[-1] for k in m.outputs}
    assert names == {"graph_nodes.csv", "graph_edges.csv", "pois.csv", "hexes.csv", "intersections.csv",
                     "region.json"}
    assert list(m.stages) == ["ingest"]
    rec = json.loads((out / "manifest.json").read_text())
    assert rec["outputs"] == m.outputs and rec["config_hash"] == cfg.digest()
    assert all(len(v) == 64 for v in rec["inputs"].values())


def test_aggregate_without_samples(small_city, tmp_path):
    cfg = load_config(small_city)
    run_pipeline(cfg, {"ingest"}, out=tmp_path / "o")
    with pytest.raises(StageError, match="missing upstream stage output") as err:
        run_pipeline(cfg, {"aggregate"}, out=tmp_path / "o")
    assert err.value.region == "gridville" and err.value.stage == "aggregate"


def test_sample_without_ingest(small_city, tmp_path):
    with pytest.raises(StageError, match="missing upstream stage output"):
        run_pipeline(load_config(small_city), {"sample"}, out=tmp_path / "o")


def test_module_error_carries_context(small_city, tmp_path):
    (small_city.parent / "gridville_pop.asc").write_text("ncols 3\n")
    with pytest.raises(StageError, match=r"^\[gridville:ingest\]"):
        run_pipeline(load_config(small_city), {"ingest"}, out=tmp_path / "o")


def test_stages_rerun_independently(small_city, tmp_path):
    cfg = load_config(small_city)
    out = tmp_path / "o"
    run_pipeline(cfg, out=out)
    first = (out / "gridville_hex.csv").read_bytes()
    run_pipeline(cfg, {"aggregate"}, out=out)
    assert (out / "gridville_hex.csv").read_bytes() == first


def test_outputs_and_empty_region(two_city, tmp_path):
    cfg = load_config(two_city)
    out = tmp_path / "o"
    m = run_pipeline(cfg, {"ingest", "sample", "aggregate"}, out=out)
    for name in ("gridville_hex.geojson", "emptyville_hex.geojson", "all_cities.geojson",
                 "gridville_hex.csv", "emptyville_hex.csv", "all_cities.csv"):
        assert name in m.outputs
    empty = json.loads((out / "emptyville_hex.geojson").read_text())
    assert empty == {"type": "FeatureCollection", "features": []}
    with open(out / "all_cities.csv", newline="") as fh:
        rows = {r["study_region"]: r for r in csv.DictReader(fh)}
    assert rows["emptyville"]["urban_sample_point_count"] == "0"
    assert rows["emptyville"]["local_walkability"] == ""
    assert int(rows["gridville"]["urban_sample_point_count"]) > 0

    hexes = json.loads((out / "gridville_hex.geojson").read_text())
    props = hexes["features"][0]["properties"]
    assert "pct_access_500m_fresh_food_market_binary" in props
    with open(out / "gridville_hex.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == list(props)
    ring = np.array(hexes["features"][0]["geometry"]["coordinates"][0])
    assert ring.shape == (7, 2) and np.all(np.abs(ring[:, 0]) <= 180) and np.all(np.abs(ring[:, 1]) <= 90)

    city = json.loads((out / "all_cities.geojson").read_text())
    with open(out / "all_cities.csv", newline="") as fh:
        cheader = next(csv.reader(fh))
    for f in city["features"]:
        assert list(f["properties"]) == cheader


def test_output_names_from_dictionary(small_city, tmp_path):
    out = tmp_path / "o"
    run_pipeline(load_config(small_city), {"ingest", "sample", "aggregate"}, out=out)
    allowed = set(HEX_COVARIATES) | set(CITY_COVARIATES) | set(LOCAL) | set(POP_LOCAL) | set(ALL_Z) | set(ALL_POP_Z)
    for name in ("gridville_hex.csv", "all_cities.csv"):
        with open(out / name, newline="") as fh:
            for col in next(csv.reader(fh)):
                base = col[4:] if col.startswith("pop_pct_access_") else col
                assert col in allowed or base.startswith("pct_access_500m_"), col


def test_property_collision(tmp_path):
    with pytest.raises(Exception, match="collision"):
        write_table(tmp_path / "x.csv", {"a": [1]}, ["a", "a"])
    with pytest.raises(Exception, match="collision"):
        write_feature_collection(tmp_path / "x.geojson", {"a": [1]}, [None], ["a", "a"])


def test_nan_written_as_null(tmp_path):
    write_feature_collection(tmp_path / "x.geojson", {"a": np.array([np.nan, 1.5])}, [None, None])
    feats = json.loads((tmp_path / "x.geojson").read_text())["features"]
    assert feats[0]["properties"]["a"] is None and feats[1]["properties"]["a"] == 1.5


def test_validate_stage_with_official_layers(small_city, tmp_path):
    cfg = load_config(small_city)
    out = tmp_path / "o"
    run_pipeline(cfg, {"ingest"}, out=out)
    # official layers: the city's own streets and destinations, written back as WGS84 GeoJSON
    from pedaccess.pipeline import ValidationInputs, load_graph, load_pois
    from pedaccess.geometry.projection import unproject
    from pedaccess.synthetic import ZONE
    g = load_graph(out / "gridville", ZONE)

    def lonlat(a):
        lat, lon = unproject(a[:, 0], a[:, 1], ZONE)
        return np.column_stack([lon, lat]).tolist()

    lines = [{"type": "Feature", "properties": {}, "geometry": {"type": "LineString", "coordinates": lonlat(p)}}
             for p in g.polylines]
    (tmp_path / "edges.geojson").write_text(json.dumps({"type": "FeatureCollection", "features": lines}))
    pois = load_pois(out / "gridville" / "pois.csv", ["fresh_food_market"])["fresh_food_market"]
    pts = [{"type": "Feature", "properties": {}, "geometry": {"type": "Point", "coordinates": c}}
           for c in lonlat(pois.xy)]
    (tmp_path / "dests.geojson").write_text(json.dumps({"type": "FeatureCollection", "features": pts}))
    vin = ValidationInputs(tmp_path / "edges.geojson", tmp_path / "dests.geojson", (10.0, 50.0), seed=5)
    m = run_pipeline(cfg, {"validate"}, out=out, validation=vin)
    d = out / "gridville"
    with open(d / "validation_edges.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    assert float(row["pct_official_within_10m"]) == pytest.approx(100.0)
    with open(d / "validation_destinations.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["pct_osm_overlapping_official"]) for r in rows] == [100.0, 100.0]
    with open(d / "validation_hex_summary.csv", newline="") as fh:
        assert float(next(csv.DictReader(fh))["pct_true_condition"]) == 100.0
    assert "gridville/validation_sample.csv" in m.outputs


# ------------------------------------------------------------------ CLI


def test_cli_run_all(small_city, tmp_path, capsys):
    out = tmp_path / "cli"
    assert main(["run-all", "--config", str(small_city), "--out", str(out), "--seed", "3"]) == 0
    assert (out / "all_cities.geojson").exists() and (out / "manifest.json").exists()
    assert (out / "gridville" / "validation_sample.csv").exists()


def test_cli_errors(small_city, tmp_path, capsys):
    assert main(["ingest", "--config", str(tmp_path / "missing.toml")]) != 0
    assert "not found" in capsys.readouterr().err
    assert main(["aggregate", "--config", str(small_city), "--out", str(tmp_path / "x")]) != 0
    assert "missing upstream stage output" in capsys.readouterr().err
    assert main(["ingest", "--config", str(small_city), "--region", "atlantis"]) != 0
    assert "unknown region" in capsys.readouterr().err
    assert main(["sample", "--config", str(small_city), "--threads", "0"]) != 0


def test_cli_rejects_bad_radii(small_city):
    with pytest.raises(SystemExit):
        main(["validate", "--config", str(small_city), "--radii", "ten"])
