"""WGS84 transverse Mercator (UTM) forward and inverse mapping.

Uses the Krueger series in the third flattening, carried to sixth order,
which stays well under a millimetre of error across a 6 degree zone.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..errors import ProjectionError

WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563
K0 = 0.9996
FALSE_EASTING = 500_000.0
FALSE_NORTHING_SOUTH = 10_000_000.0
MAX_LATITUDE = 84.0

_n = WGS84_F / (2 - WGS84_F)
_e = math.sqrt(WGS84_F * (2 - WGS84_F))
_A = WGS84_A / (1 + _n) * (1 + _n**2 / 4 + _n**4 / 64 + _n**6 / 256)

_ALPHA = (
    _n / 2 - 2 * _n**2 / 3 + 5 * _n**3 / 16 + 41 * _n**4 / 180
    - 127 * _n**5 / 288 + 7891 * _n**6 / 37800,
    13 * _n**2 / 48 - 3 * _n**3 / 5 + 557 * _n**4 / 1440
    + 281 * _n**5 / 630 - 1983433 * _n**6 / 1935360,
    61 * _n**3 / 240 - 103 * _n**4 / 140 + 15061 * _n**5 / 26880
    + 167603 * _n**6 / 181440,
    49561 * _n**4 / 161280 - 179 * _n**5 / 168 + 6601661 * _n**6 / 7257600,
    34729 * _n**5 / 80640 - 3418889 * _n**6 / 1995840,
    212378941 * _n**6 / 319334400,
)

_BETA = (
    _n / 2 - 2 * _n**2 / 3 + 37 * _n**3 / 96 - _n**4 / 360
    - 81 * _n**5 / 512 + 96199 * _n**6 / 604800,
    _n**2 / 48 + _n**3 / 15 - 437 * _n**4 / 1440 + 46 * _n**5 / 105
    - 1118711 * _n**6 / 3870720,
    17 * _n**3 / 480 - 37 * _n**4 / 840 - 209 * _n**5 / 4480
    + 5569 * _n**6 / 90720,
    4397 * _n**4 / 161280 - 11 * _n**5 / 504 - 830251 * _n**6 / 7257600,
    4583 * _n**5 / 161280 - 108847 * _n**6 / 3991680,
    20648693 * _n**6 / 638668800,
)


class Zone(NamedTuple):
    """Projection context: UTM zone number and hemisphere."""

    number: int
    south: bool = False

    @property
    def central_meridian(self) -> float:
        return -183.0 + 6.0 * self.number

    @property
    def epsg(self) -> int:
        return (32700 if self.south else 32600) + self.number

    def __str__(self) -> str:
        return f"{self.number}{'S' if self.south else 'N'}"


class ProjectedPoint(NamedTuple):
    x: float
    y: float
    zone: Zone


def utm_zone_for(lon: float) -> int:
    """Zone number for a longitude, clamped to [1, 60]."""
    zone = int(math.floor((lon + 180.0) / 6.0)) + 1
    return min(max(zone, 1), 60)


def zone_for(lon: float, lat: float, override: int | None = None) -> Zone:
    return Zone(override if override is not None else utm_zone_for(lon), lat < 0)


def project(lat, lon, zone: Zone | int):
    """Forward transverse Mercator.

    Accepts scalars or arrays of degrees; returns ``(x, y)`` in metres of
    the same shape.
    """
    if not isinstance(zone, Zone):
        zone = Zone(int(zone))
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if np.any(np.abs(lat) > MAX_LATITUDE) or not np.all(np.isfinite(lat)):
        raise ProjectionError(f"latitude outside supported band of +/-{MAX_LATITUDE} deg")
    phi = np.radians(lat)
    lam = np.radians(lon - zone.central_meridian)
    lam = (lam + math.pi) % (2 * math.pi) - math.pi

    sphi = np.sin(phi)
    tau = np.tan(phi)
    sigma = np.sinh(_e * np.arctanh(_e * sphi))
    taup = tau * np.sqrt(1 + sigma**2) - sigma * np.sqrt(1 + tau**2)
    xip = np.arctan2(taup, np.cos(lam))
    etap = np.arcsinh(np.sin(lam) / np.sqrt(taup**2 + np.cos(lam) ** 2))

    xi = xip.copy()
    eta = etap.copy()
    for j, a in enumerate(_ALPHA, start=1):
        xi = xi + a * np.sin(2 * j * xip) * np.cosh(2 * j * etap)
        eta = eta + a * np.cos(2 * j * xip) * np.sinh(2 * j * etap)

    x = FALSE_EASTING + K0 * _A * eta
    y = K0 * _A * xi + (FALSE_NORTHING_SOUTH if zone.south else 0.0)
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def unproject(x, y, zone: Zone | int):
    """Inverse transverse Mercator; returns ``(lat, lon)`` in degrees."""
    if not isinstance(zone, Zone):
        zone = Zone(int(zone))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if zone.south:
        y = y - FALSE_NORTHING_SOUTH
    xi = y / (K0 * _A)
    eta = (x - FALSE_EASTING) / (K0 * _A)

    xip = xi.copy()
    etap = eta.copy()
    for j, b in enumerate(_BETA, start=1):
        xip = xip - b * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        etap = etap - b * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

    taup = np.sin(xip) / np.sqrt(np.sinh(etap) ** 2 + np.cos(xip) ** 2)
    lam = np.arctan2(np.sinh(etap), np.cos(xip))

    # Newton iteration for tau from the conformal tau'
    tau = taup.copy()
    e2m = 1 - _e**2
    for _ in range(6):
        sigma = np.sinh(_e * np.arctanh(_e * tau / np.sqrt(1 + tau**2)))
        taupa = tau * np.sqrt(1 + sigma**2) - sigma * np.sqrt(1 + tau**2)
        dtau = (taup - taupa) * (1 + e2m * tau**2) / (
            e2m * np.sqrt(1 + taupa**2) * np.sqrt(1 + tau**2)
        )
        tau = tau + dtau
        if np.all(np.abs(dtau) < 1e-14 * np.maximum(1.0, np.abs(tau))):
            break

    lat = np.degrees(np.arctan(tau))
    lon = np.degrees(lam) + zone.central_meridian
    if lat.ndim == 0:
        return float(lat), float(lon)
    return lat, lon
