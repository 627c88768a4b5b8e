"""Estimate CSV, trajectory GeoJSON and the plain-text run report."""

from __future__ import annotations

import csv
import json
import math
from typing import Iterable, TextIO

from .geo import GeodeticPoint, NedPoint
from .ingest import format_timestamp, parse_timestamp
from .errors import ParseError
from .uncertainty import Method, PositionEstimate, RejectReason

ESTIMATE_COLUMNS = (
    "device_id", "group_id", "t_center_iso8601", "lat_deg", "lon_deg", "east_m", "north_m",
    "cost_m2", "sigma_x_m", "sigma_y_m", "n_slbs", "method", "accepted", "reject_reason",
)


def _num(v: float, digits: int) -> str:
    return f"{v:.{digits}f}" if math.isfinite(v) else "nan"


def write_estimates(estimates: Iterable[PositionEstimate], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(ESTIMATE_COLUMNS)
    for e in estimates:
        w.writerow([
            e.float, e.group_id, format_timestamp(e.t_center, 6),
            f"{e.position.latitude_deg:.10f}", f"{e.position.longitude_deg:.10f}",
            _num(e.position_ned.east_m, 6), _num(e.position_ned.north_m, 6),
            _num(e.cost, 6), _num(e.sigma_x_m, 6), _num(e.sigma_y_m, 6),
            e.n_slbs, e.method.value, "true" if e.accepted else "false", e.reject_reason.value,
        ])


def read_estimates(stream: TextIO) -> list[PositionEstimate]:
    reader = csv.DictReader(stream)
    missing = [c for c in ESTIMATE_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ParseError(f"missing required column(s): {', '.join(missing)}", line=1)
    out = []
    for row in reader:
        try:
            cost, sx, sy = float(row["cost_m2"]), float(row["sigma_x_m"]), float(row["sigma_y_m"])
            reason = RejectReason(row["reject_reason"])
            out.append(PositionEstimate(
                float=int(row["device_id"]),
                group_id=int(row["group_id"]),
                t_center=parse_timestamp(row["t_center_iso8601"]),
                position=GeodeticPoint(float(row["lat_deg"]), float(row["lon_deg"])),
                position_ned=NedPoint(float(row["north_m"]), float(row["east_m"])),
                cost=cost, sigma_x_m=sx, sigma_y_m=sy,
                n_slbs=int(row["n_slbs"]),
                method=Method(row["method"]),
                converged=reason is not RejectReason.NOT_CONVERGED,
                well_conditioned=reason is not RejectReason.ILL_CONDITIONED,
                accepted=row["accepted"].strip().lower() == "true",
                reject_reason=reason,
            ))
        except ValueError as exc:
            raise ParseError(str(exc), line=reader.line_num) from None
    return out


def trajectory_geojson(estimates: Iterable[PositionEstimate]) -> dict:
    """One LineString feature per device through its accepted estimates.

    Devices with fewer than two accepted estimates are left out (a LineString
    needs two positions).
    """
    by_dev: dict[int, list[PositionEstimate]] = {}
    for e in estimates:
        if e.accepted:
            by_dev.setdefault(e.float, []).append(e)
    features = []
    for dev in sorted(by_dev):
        pts = sorted(by_dev[dev], key=lambda e: (e.t_center, e.group_id))
        if len(pts) < 2:
            continue
        features.append({
            "type": "Feature",
            "properties": {
                "device_id": dev,
                "method": pts[0].method.value,
                "times": [format_timestamp(e.t_center, 6) for e in pts],
                "sigma_x_m": [round(e.sigma_x_m, 6) for e in pts],
                "sigma_y_m": [round(e.sigma_y_m, 6) for e in pts],
            },
            "geometry": {
                "type": "LineString",
                "coordinates": [[round(e.position.longitude_deg, 10), round(e.position.latitude_deg, 10)]
                                for e in pts],
            },
        })
    return {"type": "FeatureCollection", "features": features}


def write_geojson(estimates: Iterable[PositionEstimate], stream: TextIO) -> None:
    json.dump(trajectory_geojson(estimates), stream, indent=2)
    stream.write("\n")


def report_text(mode: str, diagnostics, evaluation=None, backend: str | None = None) -> str:
    lines = [f"mode: {mode}"]
    if backend:
        lines.append(f"kernel backend: {backend}")
    lines.extend(diagnostics.lines())
    if evaluation is not None and evaluation.unfiltered:
        lines.append("error statistics (horizontal, vs truth):")
        lines.extend("  " + ln for ln in evaluation.lines())
    return "\n".join(lines) + "\n"
