"""Sample-point estimates: local densities, access scores and composites."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import DataError
from ..network.paths import NodeDistanceField
from ..osm.graph import PedestrianGraph
from .sampling import SamplePoints, sample_access_distance, terminal_indices
from .scores import AccessParams, access_score, daily_living, interpolate_density, walkability, zscores

DAILY_LIVING_CLASSES = ("fresh_food_market", "convenience", "pt_any")
Z_COLUMNS = ("z_nh_population_density", "z_nh_intersection_density", "z_daily_living")


@dataclass
class SampleEstimates:
    """Per-point estimates aligned with ``points``.

    ``distance[cls]`` is NaN where no destination of the class was reached.
    ``scores[cls][method]`` holds the access score per method.
    """

    points: SamplePoints
    nh_population_density: np.ndarray
    nh_intersection_density: np.ndarray
    distance: dict[str, np.ndarray]
    scores: dict[str, dict[str, np.ndarray]]
    daily_living: np.ndarray
    z: dict[str, np.ndarray]
    walkability: np.ndarray
    diagnostics: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)


def methods_for(method: str) -> tuple[str, ...]:
    """Binary scores are always needed; the configured method is added when different."""
    return ("binary",) if method == "binary" else ("binary", method)


def within_city_z(nh_pop, nh_int, dl) -> tuple[dict[str, np.ndarray], np.ndarray, dict[str, int]]:
    """z-scores over the city's retained points and their sum (walkability).

    With fewer than two points the columns are left empty (NaN) and flagged.
    """
    diag: dict[str, int] = {}
    n = len(dl)
    if n < 2:
        z = {c: np.full(n, np.nan) for c in Z_COLUMNS}
        diag["within_city_z_undefined"] = 1
        return z, np.full(n, np.nan), diag
    z = {}
    for name, vals in zip(Z_COLUMNS, (nh_pop, nh_int, dl)):
        z[name], flat = zscores(vals)
        if flat:
            diag[f"{name}_constant"] = 1
    return z, walkability(*(z[c] for c in Z_COLUMNS)), diag


def estimate_sample_points(g: PedestrianGraph, points: SamplePoints, node_pop_density: np.ndarray,
                           node_intersection_density: np.ndarray, fields: Mapping[str, NodeDistanceField],
                           method: str = "binary", params: AccessParams = AccessParams(),
                           daily_classes: Sequence[str] = DAILY_LIVING_CLASSES) -> SampleEstimates:
    """Combine node-level results into estimates for every sample point.

    Node arrays are indexed like ``g.node_ids``. Points whose terminal nodes
    are missing from the graph are omitted before anything is computed.
    """
    for c in daily_classes:
        if c not in fields:
            raise DataError(f"daily living class {c!r} has no distance field")
    _, _, omitted = terminal_indices(g, points)
    diag = {"omitted_missing_node": int(omitted.sum())}
    points = points.subset(~omitted)
    i1, i2, _ = terminal_indices(g, points)
    nh_pop = interpolate_density(node_pop_density[i1], node_pop_density[i2], points.l1, points.l2)
    nh_int = interpolate_density(node_intersection_density[i1], node_intersection_density[i2],
                                 points.l1, points.l2)
    nh_pop, nh_int = np.atleast_1d(nh_pop), np.atleast_1d(nh_int)
    distance, scores = {}, {}
    for cls in sorted(fields):
        d, _ = sample_access_distance(g, points, fields[cls])
        distance[cls] = d
        scores[cls] = {m: np.atleast_1d(access_score(d, m, params)) for m in methods_for(method)}
    dl = np.atleast_1d(daily_living(*(scores[c]["binary"] for c in daily_classes)))
    z, walk, zdiag = within_city_z(nh_pop, nh_int, dl)
    diag.update(zdiag)
    return SampleEstimates(points, nh_pop, nh_int, distance, scores, dl, z, walk, diag)
