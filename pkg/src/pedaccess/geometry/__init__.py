from .hexgrid import HexCell, HexGrid, hex_area_m2, hex_tessellate
from .index import GridIndex, nearest_within
from .projection import ProjectedPoint, Zone, project, unproject, utm_zone_for, zone_for
from .shapes import (
    Polygon,
    in_buffered_region,
    points_in_polygon,
    polygon_intersection,
    polyline_length,
    region_area,
    region_bounds,
)

__all__ = [
    "GridIndex", "HexCell", "HexGrid", "Polygon", "ProjectedPoint", "Zone",
    "hex_area_m2", "hex_tessellate", "in_buffered_region", "nearest_within",
    "points_in_polygon", "polygon_intersection", "polyline_length", "project",
    "region_area", "region_bounds", "unproject", "utm_zone_for", "zone_for",
]
