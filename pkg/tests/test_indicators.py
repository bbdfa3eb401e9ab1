import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pedaccess.errors import DataError
from pedaccess.geometry import hex_tessellate
from pedaccess.indicators import (
    AccessParams,
    SampleEstimates,
    SamplePoints,
    access_score,
    aggregate_city,
    aggregate_hex,
    between_city_z,
    daily_living,
    filter_sample_points,
    generate_sample_points,
    interpolate_density,
    pct_column,
    sample_access_distance,
    walkability,
    zscores,
)
from pedaccess.network.paths import NodeDistanceField
from pedaccess.osm.graph import PedestrianGraph
from pedaccess.synthetic import grid_graph

P = AccessParams()
finite = st.floats(0, 1e5, allow_nan=False)


# ------------------------------------------------------------ scores


def test_score_examples():
    assert access_score(499, "binary", P) == 1
    assert access_score(500, "binary", P) == 1
    assert access_score(501, "binary", P) == 0
    assert access_score(500, "soft", P) == 0.5
    assert access_score(400, "soft", P) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
    assert access_score(1000, "gaussian", P) == pytest.approx(math.exp(-250000 / 129842), abs=1e-12)


@pytest.mark.parametrize("method", ["binary", "soft", "gaussian"])
def test_unreached_scores_zero(method):
    assert access_score(None, method, P) == 0.0
    assert access_score(np.array([np.nan, 100.0]), method, P)[0] == 0.0


@settings(max_examples=200)
@given(finite, finite, st.sampled_from(["binary", "soft", "gaussian"]))
def test_scores_non_increasing(a, b, method):
    lo, hi = min(a, b), max(a, b)
    assert 0 <= access_score(hi, method, P) <= access_score(lo, method, P) <= 1


@given(st.floats(0, 500))
def test_binary_and_gaussian_one_up_to_threshold(d):
    assert access_score(d, "binary", P) == 1.0
    assert access_score(d, "gaussian", P) == 1.0


def test_gaussian_continuous_at_threshold():
    assert access_score(500 + 1e-9, "gaussian", P) == pytest.approx(1.0, abs=1e-12)


def test_soft_huge_distance_does_not_overflow():
    assert access_score(1e9, "soft", P) == 0.0


def test_bad_params_and_method():
    with pytest.raises(DataError):
        AccessParams(t=0)
    with pytest.raises(DataError):
        access_score(1.0, "linear", P)


def test_interpolation_examples():
    assert interpolate_density(10, 20, 0, 100) == 10
    assert interpolate_density(10, 20, 100, 0) == 20
    assert interpolate_density(10, 20, 30, 70) == pytest.approx(13.0, abs=1e-12)
    assert interpolate_density(10, 20, 0, 0) == 10


@given(st.floats(0, 1e6), st.floats(0, 1e4), st.floats(0, 1e4))
def test_interpolation_constant(c, l1, l2):
    assert interpolate_density(c, c, l1, l2) == pytest.approx(c, rel=1e-12, abs=1e-9)


@given(finite, finite, finite, finite)
def test_interpolation_is_convex(d1, d2, l1, l2):
    v = interpolate_density(d1, d2, l1, l2)
    assert min(d1, d2) - 1e-9 * max(1, d1, d2) <= v <= max(d1, d2) + 1e-9 * max(1, d1, d2)


def test_interpolation_negative_distance():
    with pytest.raises(DataError):
        interpolate_density(1, 2, -1, 3)


def test_daily_living():
    assert daily_living(1, 1, 0) == 2
    assert daily_living(0, 0, 0) == 0
    assert daily_living(1, 1, 1) == 3
    with pytest.raises(DataError):
        daily_living(0.5, 1, 1)


def test_zscores():
    z, flat = zscores([1, 3])
    assert z.tolist() == [-1.0, 1.0] and not flat
    z, flat = zscores([4, 4, 4])
    assert z.tolist() == [0, 0, 0] and flat
    with pytest.raises(DataError):
        zscores([1])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=200))
def test_zscore_moments(xs):
    z, flat = zscores(xs)
    if not flat:
        assert abs(z.mean()) < 1e-9
        assert abs(np.sqrt(np.mean(z ** 2)) - 1) < 1e-9


def test_walkability():
    assert walkability(0, 0, 0) == 0
    assert walkability(1.0, -0.5, 0.25) == 0.75


# ------------------------------------------------------------ sample points


def line_graph(length, n_vertices=2):
    xs = np.linspace(0, length, n_vertices)
    line = np.column_stack([xs, np.zeros(n_vertices)])
    return PedestrianGraph.from_edges([1, 2], [[0, 0], [length, 0]], [(1, 2, line)])


def test_offsets_on_hundred_metre_edge():
    sp = generate_sample_points(line_graph(100.0, 5), 30)
    assert sp.l1.tolist() == [0, 30, 60, 90]
    assert sp.l2[1] == 70
    assert sp.x.tolist() == [0, 30, 60, 90]
    assert (sp.n1 == 1).all() and (sp.n2 == 2).all()


def test_short_edge_single_point():
    sp = generate_sample_points(line_graph(20.0), 30)
    assert len(sp) == 1 and sp.l1[0] == 0


def test_l1_plus_l2_is_length():
    g = grid_graph(8, 8, spacing=73.3, jitter=20, seed=1)
    sp = generate_sample_points(g, 30)
    lengths = g.length[sp.edge]
    assert np.allclose(sp.l1 + sp.l2, lengths, rtol=1e-12)
    assert (sp.l1 >= 0).all() and (sp.l2 > 0).all()


def test_node_points_not_duplicated():
    g = grid_graph(5, 5, spacing=100)
    sp = generate_sample_points(g, 30)
    at_node = sp.l1 == 0
    assert len(np.unique(sp.n1[at_node])) == at_node.sum()
    # the lowest edge index keeps the shared node
    first_edge = {}
    for k in range(g.n_edges):
        first_edge.setdefault(int(g.node_ids[g.u[k]]), k)
    for n, e in zip(sp.n1[at_node], sp.edge[at_node]):
        assert first_edge[int(n)] == e


def test_interval_must_be_positive():
    with pytest.raises(DataError):
        generate_sample_points(line_graph(10.0), 0)


def _points(hexes):
    n = len(hexes)
    z = np.zeros(n)
    return SamplePoints(np.arange(n), z, z, np.zeros(n, int), np.ones(n, int), np.ones(n, int) * 2,
                        z, z + 1, np.asarray(hexes))


def test_filter_threshold():
    sp = _points([0, 1, 2, -1])
    kept = filter_sample_points(sp, np.array([4.0, 5.0, 6.0]), 5)
    assert kept.hex.tolist() == [1, 2]
    assert len(filter_sample_points(sp, np.array([4.0, 5.0, 6.0]), 0)) == 3


def _field(dist, reached):
    return NodeDistanceField("x", 1000, np.asarray(dist, float), np.asarray(reached, bool))


def test_access_distance_two_node_min():
    g = line_graph(100.0)
    sp = SamplePoints(np.array([0]), np.array([10.0]), np.array([0.0]), np.array([0]), np.array([1]),
                      np.array([2]), np.array([10.0]), np.array([90.0]), np.array([0]))
    d, om = sample_access_distance(g, sp, _field([200, 150], [True, True]))
    assert d[0] == 210 and not om[0]
    d, _ = sample_access_distance(g, sp, _field([0, 0], [False, False]))
    assert np.isnan(d[0])
    d, _ = sample_access_distance(g, sp, _field([0, 5], [False, True]))
    assert d[0] == 95


def test_access_distance_missing_node_omitted():
    g = line_graph(100.0)
    sp = SamplePoints(np.array([0]), np.array([10.0]), np.array([0.0]), np.array([0]), np.array([1]),
                      np.array([7]), np.array([10.0]), np.array([90.0]), np.array([0]))
    d, om = sample_access_distance(g, sp, _field([200, 150], [True, True]))
    assert om[0] and np.isnan(d[0])


# ------------------------------------------------------------ aggregation


def make_estimates(hexes, binary, pop, inter, dl, walk, soft=None):
    n = len(hexes)
    sp = _points(hexes)
    scores = {"fresh_food_market": {"binary": np.asarray(binary, float)}}
    if soft is not None:
        scores["fresh_food_market"]["soft"] = np.asarray(soft, float)
    return SampleEstimates(sp, np.asarray(pop, float), np.asarray(inter, float),
                           {"fresh_food_market": np.zeros(n)}, scores, np.asarray(dl), {},
                           np.asarray(walk, float))


def grid_with_pop(pops):
    grid = hex_tessellate((0, 0, 2000, 2000), 250)
    for c, p in zip(grid, pops):
        c.population = p
        c.intersection_count = 2
    return grid


def test_hex_pct_binary():
    est = make_estimates([3, 3, 3, 3], [1, 1, 0, 0], [1] * 4, [1] * 4, [1] * 4, [0] * 4)
    f = aggregate_hex(est, grid_with_pop([10] * 100), "A", 500, "binary")
    assert f[pct_column(500, "fresh_food_market", "binary")].tolist() == [50.0]
    assert f["urban_sample_point_count"].tolist() == [4]


def test_hex_singleton_equals_point():
    est = make_estimates([5], [1], [1234.5], [88.0], [2], [0.3], soft=[0.7])
    f = aggregate_hex(est, grid_with_pop([10] * 100), "A", 500, "soft")
    assert f["local_nh_population_density"][0] == 1234.5
    assert f["local_nh_intersection_density"][0] == 88.0
    assert f["local_daily_living"][0] == 2
    assert f["local_walkability"][0] == 0.3
    assert f["pct_access_500m_fresh_food_market_soft"][0] == pytest.approx(70.0)


def _random_estimates(rng, n, n_hex=30):
    hexes = rng.integers(0, n_hex, n)
    binary = rng.integers(0, 2, n)
    return make_estimates(hexes, binary, rng.uniform(0, 1e4, n), rng.uniform(0, 300, n),
                          rng.integers(0, 4, n), rng.normal(size=n))


def test_hex_means_recomputed():
    rng = np.random.default_rng(0)
    est = _random_estimates(rng, 500)
    f = aggregate_hex(est, grid_with_pop(rng.uniform(0, 50, 100)), "A", 500, "binary")
    for i, h in enumerate(f["hex_id"]):
        m = est.points.hex == h
        assert abs(f["local_nh_population_density"][i] - est.nh_population_density[m].mean()) <= 1e-12 * 1e4
        assert abs(f["local_walkability"][i] - est.walkability[m].mean()) < 1e-12
        assert 0 <= f["pct_access_500m_fresh_food_market_binary"][i] <= 100


def test_hex_aggregation_permutation_invariant():
    rng = np.random.default_rng(1)
    est = _random_estimates(rng, 200)
    perm = rng.permutation(200)
    est2 = make_estimates(est.points.hex[perm], est.scores["fresh_food_market"]["binary"][perm],
                          est.nh_population_density[perm], est.nh_intersection_density[perm],
                          est.daily_living[perm], est.walkability[perm])
    grid = grid_with_pop([10] * 100)
    a, b = aggregate_hex(est, grid, "A", 500, "binary"), aggregate_hex(est2, grid, "A", 500, "binary")
    for name in a.names:
        if a[name].dtype == object:
            assert a[name].tolist() == b[name].tolist()
        else:
            np.testing.assert_allclose(a[name], b[name], rtol=1e-12, atol=1e-9)


def _city(hexf):
    return aggregate_city(hexf, "A", 10.0, 1000.0, 20, 500, ["fresh_food_market"], "binary")


def test_city_population_weighted_mean():
    est = make_estimates([0, 1], [1, 0], [10, 30], [0, 0], [0, 0], [0, 0])
    hexf = aggregate_hex(est, grid_with_pop([100, 300] + [0] * 98), "A", 500, "binary")
    city = _city(hexf)
    assert city["pop_nh_pop_density"][0] == 25.0
    assert city["local_nh_population_density"][0] == 20.0
    assert city["pop_pct_access_500m_fresh_food_market_binary"][0] == 25.0
    assert city["urban_sample_point_count"][0] == 2


def test_city_uniform_weights_equal_plain_mean():
    rng = np.random.default_rng(5)
    est = _random_estimates(rng, 300)
    hexf = aggregate_hex(est, grid_with_pop([7.0] * 100), "A", 500, "binary")
    city = _city(hexf)
    assert city["pop_walkability"][0] == pytest.approx(city["local_walkability"][0], rel=1e-12, abs=1e-12)
    assert city["urban_sample_point_count"][0] == hexf["urban_sample_point_count"].sum() == 300


def test_city_zero_weight_errors():
    est = make_estimates([0], [1], [1], [1], [1], [0])
    hexf = aggregate_hex(est, grid_with_pop([0.0] * 100), "A", 500, "binary")
    with pytest.raises(DataError, match="weight"):
        _city(hexf)


def test_city_empty_region():
    est = make_estimates([], [], [], [], [], [])
    hexf = aggregate_hex(est, grid_with_pop([1.0] * 100), "A", 500, "binary")
    city = _city(hexf)
    assert len(hexf) == 0
    assert city["urban_sample_point_count"][0] == 0
    assert np.isnan(city["pop_walkability"][0])


def test_single_region_pooled_equals_own_z():
    rng = np.random.default_rng(2)
    est = _random_estimates(rng, 400)
    hexf = aggregate_hex(est, grid_with_pop(rng.uniform(1, 50, 100)), "A", 500, "binary")
    city = _city(hexf)
    between_city_z([hexf], [city])
    z, _ = zscores(hexf["local_nh_population_density"])
    np.testing.assert_array_equal(hexf["all_cities_z_nh_population_density"], z)


def test_two_region_pooled_recomputation():
    rng = np.random.default_rng(3)
    frames, cities = [], []
    for name in "AB":
        est = _random_estimates(rng, 300)
        h = aggregate_hex(est, grid_with_pop(rng.uniform(1, 50, 100)), name, 500, "binary")
        frames.append(h)
        cities.append(_city(h))
    between_city_z(frames, cities)
    for src, dst in [("local_nh_population_density", "all_cities_z_nh_population_density"),
                     ("local_daily_living", "all_cities_z_daily_living")]:
        pooled = np.concatenate([f[src] for f in frames])
        mu, sd = pooled.mean(), pooled.std()
        for f in frames:
            np.testing.assert_allclose(f[dst], (f[src] - mu) / sd, rtol=0, atol=1e-12)
        allz = np.concatenate([f[dst] for f in frames])
        assert abs(allz.mean()) < 1e-9 and abs(allz.std() - 1) < 1e-9
    for f, c in zip(frames, cities):
        w = f["pop_est"]
        assert c["all_cities_pop_walkability"][0] == pytest.approx(
            np.sum(f["all_cities_walkability"] * w) / w.sum(), abs=1e-12)
