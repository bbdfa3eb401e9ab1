"""Graph algorithms over the pedestrian network."""
from .intersections import IntersectionSet, cluster_points, consolidate_intersections
from .paths import (
    NodeDistanceField,
    bounded_sssp,
    nearest_destination_field,
    node_catchments,
    node_local_density,
    snap_to_nodes,
)

__all__ = [
    "IntersectionSet", "NodeDistanceField", "bounded_sssp", "cluster_points",
    "consolidate_intersections", "nearest_destination_field", "node_catchments",
    "node_local_density", "snap_to_nodes",
]
