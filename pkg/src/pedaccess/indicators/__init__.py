"""Sample points, accessibility scoring and indicator aggregation."""
from .aggregate import (
    IndicatorFrame,
    aggregate_city,
    aggregate_hex,
    between_city_z,
    city_columns,
    hex_columns,
    pct_column,
)
from .estimate import DAILY_LIVING_CLASSES, SampleEstimates, estimate_sample_points
from .sampling import SamplePoints, filter_sample_points, generate_sample_points, sample_access_distance
from .scores import AccessParams, access_score, daily_living, interpolate_density, walkability, zscores

__all__ = [
    "AccessParams", "DAILY_LIVING_CLASSES", "IndicatorFrame", "SampleEstimates", "SamplePoints",
    "access_score", "aggregate_city", "aggregate_hex", "between_city_z", "city_columns",
    "daily_living", "estimate_sample_points", "filter_sample_points", "generate_sample_points",
    "hex_columns", "interpolate_density", "pct_column", "sample_access_distance", "walkability",
    "zscores",
]
