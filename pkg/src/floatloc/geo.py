"""WGS84 geodetic <-> local North-East-Down conversion.

Everything goes through ECEF so that the inverse is exact to round-off. The
solver works in the horizontal plane with ``x = east`` and ``y = north``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


@dataclass(frozen=True)
class GeodeticPoint:
    latitude_deg: float
    longitude_deg: float
    height_m: float = 0.0

    def __post_init__(self):
        _check_bounds(self.latitude_deg, self.longitude_deg, self.height_m)


@dataclass(frozen=True)
class NedPoint:
    north_m: float
    east_m: float
    down_m: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.north_m, self.east_m, self.down_m)):
            raise InvalidInputError(f"non-finite NED point {self}")

    @property
    def xy(self) -> tuple[float, float]:
        """Planar solver coordinates (east, north)."""
        return (self.east_m, self.north_m)


@dataclass(frozen=True)
class ReferenceOrigin:
    origin: GeodeticPoint

    @classmethod
    def at(cls, latitude_deg: float, longitude_deg: float, height_m: float = 0.0):
        return cls(GeodeticPoint(latitude_deg, longitude_deg, height_m))


def _check_bounds(lat, lon, h):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    h = np.asarray(h, dtype=float)
    if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon)) and np.all(np.isfinite(h))):
        raise InvalidInputError("non-finite geodetic coordinate")
    if np.any(np.abs(lat) > 90.0):
        raise InvalidInputError(f"latitude out of [-90, 90]: {lat}")
    if np.any(np.abs(lon) > 180.0):
        raise InvalidInputError(f"longitude out of [-180, 180]: {lon}")


def geodetic_to_ecef(lat_deg, lon_deg, h_m):
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sin_lat = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + h_m) * np.cos(lat) * np.cos(lon)
    y = (n + h_m) * np.cos(lat) * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + h_m) * sin_lat
    return x, y, z


def ecef_to_geodetic(x, y, z):
    """Fixed-point iteration on latitude; converges to round-off in a few passes
    for points near the ellipsoid surface."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    p = np.hypot(x, y)
    lon = np.arctan2(y, x)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    h = np.zeros_like(p)
    for _ in range(10):
        sin_lat = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        h = p / np.cos(lat) - n
        new_lat = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
        done = np.all(np.abs(new_lat - lat) < 1e-15)
        lat = new_lat
        if done:
            break
    sin_lat = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    h = p / np.cos(lat) - n
    return np.degrees(lat), np.degrees(lon), h


def _rotation(ref: ReferenceOrigin):
    lat = math.radians(ref.origin.latitude_deg)
    lon = math.radians(ref.origin.longitude_deg)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    # rows: north, east, down expressed in ECEF
    return np.array(
        [
            [-sl * co, -sl * so, cl],
            [-so, co, 0.0],
            [-cl * co, -cl * so, -sl],
        ]
    )


def geodetic_to_ned_arrays(lat_deg, lon_deg, h_m, ref: ReferenceOrigin):
    """Vectorised form of :func:`geodetic_to_ned`. Returns ``(north, east, down)`` arrays."""
    _check_bounds(lat_deg, lon_deg, h_m)
    o = ref.origin
    x0, y0, z0 = geodetic_to_ecef(o.latitude_deg, o.longitude_deg, o.height_m)
    x, y, z = geodetic_to_ecef(np.asarray(lat_deg, float), np.asarray(lon_deg, float), np.asarray(h_m, float))
    d = np.stack([np.asarray(x - x0), np.asarray(y - y0), np.asarray(z - z0)])
    ned = _rotation(ref) @ d.reshape(3, -1)
    shape = np.shape(d[0])
    return ned[0].reshape(shape), ned[1].reshape(shape), ned[2].reshape(shape)


def ned_to_geodetic_arrays(north_m, east_m, down_m, ref: ReferenceOrigin):
    """Vectorised form of :func:`ned_to_geodetic`. Returns ``(lat, lon, h)`` arrays."""
    n = np.asarray(north_m, dtype=float)
    e = np.asarray(east_m, dtype=float)
    dn = np.asarray(down_m, dtype=float)
    n, e, dn = np.broadcast_arrays(n, e, dn)
    if not (np.all(np.isfinite(n)) and np.all(np.isfinite(e)) and np.all(np.isfinite(dn))):
        raise InvalidInputError("non-finite NED coordinate")
    o = ref.origin
    x0, y0, z0 = geodetic_to_ecef(o.latitude_deg, o.longitude_deg, o.height_m)
    d = _rotation(ref).T @ np.stack([n.ravel(), e.ravel(), dn.ravel()])
    lat, lon, h = ecef_to_geodetic(d[0] + x0, d[1] + y0, d[2] + z0)
    lon = (lon + 180.0) % 360.0 - 180.0
    return lat.reshape(n.shape), lon.reshape(n.shape), h.reshape(n.shape)


def geodetic_to_ned(p: GeodeticPoint, ref: ReferenceOrigin) -> NedPoint:
    n, e, d = geodetic_to_ned_arrays(p.latitude_deg, p.longitude_deg, p.height_m, ref)
    return NedPoint(float(n), float(e), float(d))


def ned_to_geodetic(p: NedPoint, ref: ReferenceOrigin) -> GeodeticPoint:
    lat, lon, h = ned_to_geodetic_arrays(p.north_m, p.east_m, p.down_m, ref)
    return GeodeticPoint(float(lat), float(lon), float(h))
