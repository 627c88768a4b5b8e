"""2-D position solves: range trilateration and time-difference-of-arrival.

Planar coordinates are ``(east, north)`` in metres of the run's NED frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import InsufficientDataError, InvalidInputError, SolverError
from .geo import GeodeticPoint, NedPoint, ReferenceOrigin, geodetic_to_ned_arrays
from .ingest import DiveRiseFixes


@dataclass(frozen=True)
class SolverConfig:
    xtol_m: float = 1e-6
    ftol: float = 1e-9
    max_iterations: int = 2000
    initial_step_m: float = 1.0

    def __post_init__(self):
        if not (self.xtol_m > 0 and self.ftol > 0 and self.max_iterations > 0 and self.initial_step_m > 0):
            raise InvalidInputError("solver tolerances and limits must be positive")


@dataclass(frozen=True)
class SolveResult:
    position_ned: NedPoint
    cost: float
    iterations: int
    converged: bool


def initial_guess(fixes: DiveRiseFixes, t: float) -> GeodeticPoint:
    """Straight-line interpolation between dive and rise fixes, clamped to the ends."""
    t0 = fixes.dive_fix.timestamp_utc
    t1 = fixes.rise_fix.timestamp_utc
    a = fixes.dive_fix.position
    b = fixes.rise_fix.position
    if t <= t0:
        return a
    if t >= t1:
        return b
    w = (t - t0) / (t1 - t0)
    return GeodeticPoint(
        a.latitude_deg + w * (b.latitude_deg - a.latitude_deg),
        a.longitude_deg + w * (b.longitude_deg - a.longitude_deg),
    )


def _as_xy(anchors) -> np.ndarray:
    if len(anchors) and isinstance(anchors[0], NedPoint):
        return np.array([p.xy for p in anchors], dtype=float)
    xy = np.asarray(anchors, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise InvalidInputError("anchors must be NedPoints or an (N, 2) east/north array")
    return xy


def _result(out, down_m: float) -> SolveResult:
    x, y, cost, iterations, converged, finite = out
    if not finite:
        raise SolverError(f"non-finite objective at ({x}, {y})")
    return SolveResult(NedPoint(north_m=y, east_m=x, down_m=down_m), cost, int(iterations), bool(converged))


def trilateration_cost(anchors, ranges, x: float, y: float) -> float:
    """Sum of squared range residuals at ``(east=x, north=y)``."""
    xy = _as_xy(anchors)
    return _kernels.trilateration_cost(xy[:, 0], xy[:, 1], np.asarray(ranges, float), x, y)


def trilaterate(anchors, ranges: Sequence[float], guess: NedPoint,
                cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Minimise the squared range residuals by Nelder-Mead from ``guess``.

    ``anchors`` are buoy positions (NedPoint list or (N, 2) east/north array).
    The returned ``down_m`` is copied from the guess.
    """
    xy = _as_xy(anchors)
    d = np.asarray(ranges, dtype=float)
    if len(xy) < 3 or len(d) != len(xy):
        raise InsufficientDataError(f"need >= 3 anchors with one range each, got {len(xy)}/{len(d)}")
    if not (np.all(np.isfinite(xy)) and np.all(np.isfinite(d))):
        raise SolverError("non-finite anchor or range")
    out = _kernels.nelder_mead_trilateration(
        xy[:, 0], xy[:, 1], d, guess.east_m, guess.north_m,
        cfg.xtol_m, cfg.ftol, cfg.max_iterations, cfg.initial_step_m,
    )
    return _result(out, guess.down_m)


def tdoa_cost(anchors, range_differences, x: float, y: float) -> float:
    xy = _as_xy(anchors)
    return _kernels.tdoa_cost(xy[:, 0], xy[:, 1], np.asarray(range_differences, float), x, y)


@dataclass(frozen=True)
class Arrival:
    position: NedPoint
    t_arrival: float
    device: int = 0


def order_arrivals(arrivals) -> list[Arrival]:
    """Earliest arrival first (the reference); ties go to the lower device id."""
    arr = [a if isinstance(a, Arrival) else Arrival(*a) for a in arrivals]
    return sorted(arr, key=lambda a: (a.t_arrival, a.device))


def tdoa_localize(arrivals, sound_speed_mps: float, cfg: SolverConfig = SolverConfig(),
                  down_m: float = 0.0) -> SolveResult:
    """Position from arrival-time differences, seeded at the receiver centroid.

    ``arrivals`` holds :class:`Arrival` or ``(position, t_arrival[, device])`` tuples.
    """
    arr = order_arrivals(arrivals)
    if len(arr) < 3:
        raise InsufficientDataError(f"TDoA needs >= 3 arrivals, got {len(arr)}")
    xy = np.array([a.position.xy for a in arr], dtype=float)
    t1 = arr[0].t_arrival
    dd = np.array([sound_speed_mps * (a.t_arrival - t1) for a in arr])
    dd[0] = 0.0
    if not (np.all(np.isfinite(xy)) and np.all(np.isfinite(dd))):
        raise SolverError("non-finite anchor or arrival")
    cx, cy = xy.mean(axis=0)
    out = _kernels.nelder_mead_tdoa(
        xy[:, 0], xy[:, 1], dd, float(cx), float(cy),
        cfg.xtol_m, cfg.ftol, cfg.max_iterations, cfg.initial_step_m,
    )
    return _result(out, down_m)


def anchors_to_ned(positions: Sequence[GeodeticPoint], ref: ReferenceOrigin) -> np.ndarray:
    """(N, 2) east/north array for a list of geodetic anchor positions."""
    lat = np.array([p.latitude_deg for p in positions])
    lon = np.array([p.longitude_deg for p in positions])
    n, e, _ = geodetic_to_ned_arrays(lat, lon, np.zeros_like(lat), ref)
    return np.column_stack([e, n])


def distance(a: NedPoint, b: NedPoint) -> float:
    return math.hypot(a.east_m - b.east_m, a.north_m - b.north_m)
