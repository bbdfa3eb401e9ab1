"""Exception types raised across the package."""


class PedAccessError(Exception):
    """Base class for all package errors."""


class ConfigError(PedAccessError):
    pass


class ProjectionError(PedAccessError):
    pass


class GeometryError(PedAccessError):
    pass


class OsmParseError(PedAccessError):
    pass


class NetworkError(PedAccessError):
    pass


class DataError(PedAccessError):
    """Malformed auxiliary input (raster, GTFS, boundary files)."""


class StageError(PedAccessError):
    """A pipeline stage failed; carries region and stage context."""

    def __init__(self, message: str, region: str | None = None, stage: str | None = None):
        self.region = region
        self.stage = stage
        prefix = ""
        if region or stage:
            prefix = f"[{region or '*'}:{stage or '*'}] "
        super().__init__(prefix + message)
