"""Auxiliary inputs: population rasters, GTFS schedules and boundary files."""
from .boundary import boundary_zone, load_region, read_geojson_polygons
from .gtfs import GtfsFeed, gtfs_stops_as_pois, read_gtfs, stop_average_headway
from .raster import PopulationRaster, hex_population, hex_populations, read_raster, region_population, write_raster

__all__ = [
    "GtfsFeed", "PopulationRaster", "boundary_zone", "gtfs_stops_as_pois", "hex_population",
    "hex_populations", "load_region", "read_geojson_polygons", "read_gtfs", "read_raster",
    "region_population", "stop_average_headway", "write_raster",
]
