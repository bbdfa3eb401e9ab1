import csv

import numpy as np
import pytest
import shapely
from hypothesis import given, settings
from hypothesis import strategies as st

from pedaccess.errors import DataError
from pedaccess.geometry import hex_tessellate
from pedaccess.validation import (
    destination_overlap,
    edge_overlap,
    ground_truth_verdict,
    hex_truth_stats,
    quintile_sample,
    tally_verdicts,
    write_sample_csv,
)


def street_layer(seed=0, n=40):
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(n):
        p = rng.uniform(0, 2000, 2)
        pts = [p]
        for _ in range(rng.integers(1, 5)):
            p = p + rng.normal(0, 120, 2)
            pts.append(p)
        lines.append(np.array(pts))
    return lines


def test_identical_layers_full_overlap():
    lines = street_layer()
    r = edge_overlap(lines, lines, [10, 50])
    assert r.pct_official_within == {10.0: 100.0, 50.0: 100.0}
    assert r.total_len_osm == pytest.approx(r.total_len_official)


def test_translated_layer_no_overlap():
    official = [np.array([[0.0, 0.0], [1000.0, 0.0]]), np.array([[0.0, 300.0], [1000.0, 300.0]])]
    osm = [a + [0.0, 100.0] for a in official[:1]] + [official[1] + [0.0, 100.0]]
    r = edge_overlap(osm, official, [10, 50])
    assert r.pct_official_within == {10.0: 0.0, 50.0: 0.0}


def test_half_overlap():
    official = [np.array([[0.0, 0.0], [1000.0, 0.0]])]
    osm = [np.array([[0.0, 5.0], [500.0, 5.0]])]
    # beyond x=500 the distance grows past 10 m within 9 m, so the share sits within step/length of 50%
    r = edge_overlap(osm, official, [10], step=1.0)
    assert abs(r.pct_official_within[10.0] - 50.0) <= 100 * (1.0 + np.sqrt(75)) / 1000


def test_overlap_matches_shapely_buffer():
    osm, official = street_layer(1), street_layer(2)
    r = edge_overlap(osm, official, [10, 50], step=1.0)
    ml_osm = shapely.MultiLineString([a.tolist() for a in osm])
    ml_off = shapely.MultiLineString([a.tolist() for a in official])
    for rad in (10, 50):
        want = 100 * ml_off.intersection(ml_osm.buffer(rad, quad_segs=64)).length / ml_off.length
        assert r.pct_official_within[float(rad)] == pytest.approx(want, abs=0.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.lists(st.floats(0, 300), min_size=2, max_size=6))
def test_overlap_monotone_in_radius(seed, radii):
    r = edge_overlap(street_layer(seed, 10), street_layer(seed + 1, 10), radii, step=5.0)
    vals = [r.pct_official_within[k] for k in sorted(r.pct_official_within)]
    assert all(0 <= v <= 100 for v in vals)
    assert vals == sorted(vals)


def test_empty_official_layer():
    with pytest.raises(DataError):
        edge_overlap(street_layer(), [], [10])


def test_destination_overlap_examples():
    pts = np.random.default_rng(0).uniform(0, 1000, (30, 2))
    assert destination_overlap(pts, pts, 10) == (100.0, 100.0)
    assert destination_overlap(pts, pts, 0) == (100.0, 100.0)
    assert destination_overlap([[0, 0]], [[21, 0]], 10) == (0.0, 0.0)
    assert destination_overlap([[0, 0]], [[20, 0]], 10) == (100.0, 100.0)
    assert destination_overlap([], [[0, 0]], 10) == (None, 0.0)


def test_destination_overlap_brute_force():
    rng = np.random.default_rng(4)
    a, b = rng.uniform(0, 2000, (200, 2)), rng.uniform(0, 2000, (150, 2))
    d = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    want = (100 * (d.min(axis=1) <= 50).mean(), 100 * (d.min(axis=0) <= 50).mean())
    got = destination_overlap(a, b, 25)
    assert got[0] == pytest.approx(want[0], abs=1e-12) and got[1] == pytest.approx(want[1], abs=1e-12)


def test_hex_truth_hand_table():
    grid = hex_tessellate((0, 0, 900, 750), 250)
    assert len(grid) >= 20
    grid.cells = grid.cells[:20]
    grid._by_colrow = {(c.col, c.row): c.id for c in grid.cells}
    centers = grid.centers
    # hex 0: 3 OSM + 1 official, hex 1: 2 OSM only, hex 2: 1 official only, hex 3: 1 + 1, rest empty
    osm = [centers[0]] * 3 + [centers[1]] * 2 + [centers[3]]
    off = [centers[0], centers[2], centers[3]]
    r = hex_truth_stats(osm, off, grid)
    true = np.ones(20, bool)
    true[[1, 2]] = False
    assert r.per_hex["true_condition"].tolist() == true.tolist()
    assert r.per_hex["w_osm"][0] == 0.75 and r.per_hex["w_official"][0] == 0.25
    assert r.per_hex["w_osm"][1] == 1.0 and r.per_hex["w_official"][2] == 1.0
    assert r.pct_true_condition == 90.0
    assert r.avg_weight_osm_all == pytest.approx(100 * (0.75 + 1.0 + 0.5) / 20)
    assert r.avg_weight_official_all == pytest.approx(100 * (0.25 + 1.0 + 0.5) / 20)
    assert r.avg_weight_osm_true == pytest.approx(100 * (0.75 + 0.5) / 18)
    assert r.avg_weight_official_true == pytest.approx(100 * (0.25 + 0.5) / 18)
    occupied = (r.per_hex["osm_count"] + r.per_hex["official_count"]) > 0
    assert np.allclose((r.per_hex["w_osm"] + r.per_hex["w_official"])[occupied], 1.0)


def test_quintile_sample_fifty():
    rng = np.random.default_rng(0)
    dens = rng.uniform(0, 20000, 500)
    ids = [f"n{i}" for i in range(500)]
    rows = quintile_sample(ids, ["fresh_food_market"] * 500, rng.uniform(0, 1, (500, 2)), dens, 10, seed=3)
    assert len(rows) == 50
    assert [sum(r.quintile == q for r in rows) for q in range(1, 6)] == [10] * 5
    again = quintile_sample(ids, ["fresh_food_market"] * 500, np.zeros((500, 2)), dens, 10, seed=3)
    assert [r.destination_id for r in rows] == [r.destination_id for r in again]


def test_quintile_exhaustion():
    dens = np.arange(30, dtype=float)
    rows = quintile_sample([str(i) for i in range(30)], ["x"] * 30, np.zeros((30, 2)), dens, 10)
    assert [sum(r.quintile == q for r in rows) for q in range(1, 6)] == [6] * 5


def test_quintile_empty():
    with pytest.raises(DataError):
        quintile_sample([], [], np.zeros((0, 2)), [], 10)


def test_verdicts():
    assert ground_truth_verdict(True, True, False)
    assert not ground_truth_verdict(True, False, None)
    assert not ground_truth_verdict(False, False, True)
    assert ground_truth_verdict(True, True, None)


def test_tally_from_reviewed_sheet(tmp_path):
    rows = quintile_sample(["a", "b", "c", "d"], ["x"] * 4, np.zeros((4, 2)), [1.0, 2.0, 3.0, 4.0], 10)
    p = tmp_path / "sample.csv"
    write_sample_csv(p, rows)
    with open(p, newline="") as fh:
        table = list(csv.DictReader(fh))
    for row, marks in zip(table, [("T", "T", "F"), ("T", "F", ""), ("F", "F", "T"), ("", "", "")]):
        row["maps"], row["satellite"], row["street"] = marks
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]))
        w.writeheader()
        w.writerows(table)
    t = tally_verdicts(p)
    assert t["true"] == 1 and t["false"] == 2 and t["unreviewed"] == 1
