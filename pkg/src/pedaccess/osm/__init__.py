from .graph import PedestrianGraph, build_pedestrian_graph, is_walkable
from .parse import OsmElement, OsmStream, parse_osm
from .pois import PoiSet, extract_pois, matches

__all__ = [
    "OsmElement", "OsmStream", "PedestrianGraph", "PoiSet", "build_pedestrian_graph",
    "extract_pois", "is_walkable", "matches", "parse_osm",
]
