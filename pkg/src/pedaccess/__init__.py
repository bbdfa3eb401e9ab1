"""Pedestrian accessibility indicators from open data."""

__version__ = "0.1.0"
