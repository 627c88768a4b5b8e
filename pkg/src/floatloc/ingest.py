"""Log parsing, CSV serialisation and time-series interpolation.

All timestamps are float seconds since the Unix epoch (UTC). Log files carry
ISO-8601 strings with a ``Z`` suffix and millisecond or finer resolution.
"""

from __future__ import annotations

import calendar
import csv
import enum
import io
import re
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import OutOfRangeError, ParseError, PreconditionError
from .geo import GeodeticPoint

DEFAULT_EXTRAPOLATION_S = 10.0

PING_COLUMNS = ("device_id", "direction", "peer_id", "timestamp_utc_iso8601")
GPS_COLUMNS = ("device_id", "timestamp_utc_iso8601", "lat_deg", "lon_deg")
DEPTH_COLUMNS = ("device_id", "timestamp_utc_iso8601", "depth_m")
DIVE_RISE_COLUMNS = ("device_id", "dive_time", "dive_lat", "dive_lon", "rise_time", "rise_lat", "rise_lon")


class DeviceKind(enum.Enum):
    FLOAT = "float"
    SLB = "slb"


@dataclass(frozen=True, order=True)
class DeviceId:
    id: int
    kind: DeviceKind = field(compare=False)


class Direction(enum.Enum):
    SENT = "SENT"
    RECEIVED = "RECV"


@dataclass(frozen=True)
class PingRecord:
    device: int
    direction: Direction
    peer: int
    timestamp_utc: float


@dataclass(frozen=True)
class GpsFix:
    device: int
    timestamp_utc: float
    position: GeodeticPoint


@dataclass(frozen=True)
class DepthSample:
    device: int
    timestamp_utc: float
    depth_m: float


@dataclass(frozen=True)
class DiveRiseFixes:
    device: int
    dive_fix: GpsFix
    rise_fix: GpsFix

    def __post_init__(self):
        if not self.dive_fix.timestamp_utc < self.rise_fix.timestamp_utc:
            raise ValueError(f"device {self.device}: dive fix must precede rise fix")


# -- timestamps ---------------------------------------------------------------

_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,9}))?(Z|[+-]00:?00)?$"
)


def parse_timestamp(text: str) -> float:
    """Parse an ISO-8601 UTC timestamp to epoch seconds."""
    m = _ISO_RE.match(text.strip())
    if m is None:
        raise ValueError(f"unparseable timestamp {text!r}")
    year, month, day, hh, mm, ss = (int(g) for g in m.groups()[:6])
    frac = m.group(7) or ""
    whole = calendar.timegm((year, month, day, hh, mm, ss, 0, 0, 0))
    if not frac:
        return float(whole)
    return whole + int(frac) / 10 ** len(frac)


def format_timestamp(t: float, digits: int = 6) -> str:
    """Format epoch seconds as ISO-8601 UTC with ``digits`` fractional digits."""
    scale = 10**digits
    ticks = round(t * scale)
    whole, frac = divmod(ticks, scale)
    base = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(whole))
    if digits == 0:
        return base + "Z"
    return f"{base}.{frac:0{digits}d}Z"


# -- parsing --------------------------------------------------------------------


def _reader(stream: TextIO | str, columns, path):
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file, header row missing", path=path) from None
    missing = [c for c in columns if c not in header]
    if missing:
        raise ParseError(f"missing required column(s): {', '.join(missing)}", line=1, path=path)
    index = {c: header.index(c) for c in columns}
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        yield reader.line_num, {c: row[i].strip() if i < len(row) else "" for c, i in index.items()}


def _row_error(exc, line, path):
    return ParseError(str(exc), line=line, path=path)


def _warn_unsorted(times, keys, what, path):
    last = {}
    for t, key in zip(times, keys):
        if key in last and t <= last[key]:
            warnings.warn(f"{path or what}: non-monotonic timestamps for {key}", stacklevel=3)
            return
        last[key] = t


def parse_ping_log(stream: TextIO | str, path=None) -> list[PingRecord]:
    """Parse a ping log CSV into records sorted by timestamp."""
    records = []
    for line, row in _reader(stream, PING_COLUMNS, path):
        try:
            direction = Direction(row["direction"].upper())
            device = int(row["device_id"])
            peer = int(row["peer_id"])
            t = parse_timestamp(row["timestamp_utc_iso8601"])
        except ValueError as exc:
            raise _row_error(exc, line, path) from None
        if direction is Direction.SENT and peer != device:
            raise ParseError(f"SENT row with peer_id {peer} != device_id {device}", line=line, path=path)
        records.append(PingRecord(device, direction, peer, t))
    _warn_unsorted(
        [r.timestamp_utc for r in records], [(r.device, r.direction) for r in records], "ping log", path
    )
    records.sort(key=lambda r: r.timestamp_utc)
    return records


def parse_gps_log(stream: TextIO | str, path=None) -> list[GpsFix]:
    fixes = []
    for line, row in _reader(stream, GPS_COLUMNS, path):
        try:
            fixes.append(
                GpsFix(
                    int(row["device_id"]),
                    parse_timestamp(row["timestamp_utc_iso8601"]),
                    GeodeticPoint(float(row["lat_deg"]), float(row["lon_deg"])),
                )
            )
        except ValueError as exc:
            raise _row_error(exc, line, path) from None
    _warn_unsorted([f.timestamp_utc for f in fixes], [f.device for f in fixes], "gps log", path)
    fixes.sort(key=lambda f: (f.device, f.timestamp_utc))
    return fixes


def parse_depth_log(stream: TextIO | str, path=None) -> list[DepthSample]:
    samples = []
    for line, row in _reader(stream, DEPTH_COLUMNS, path):
        try:
            depth = float(row["depth_m"])
            if not depth >= 0.0:
                raise ValueError(f"depth must be >= 0, got {row['depth_m']}")
            samples.append(DepthSample(int(row["device_id"]), parse_timestamp(row["timestamp_utc_iso8601"]), depth))
        except ValueError as exc:
            raise _row_error(exc, line, path) from None
    _warn_unsorted([s.timestamp_utc for s in samples], [s.device for s in samples], "depth log", path)
    samples.sort(key=lambda s: (s.device, s.timestamp_utc))
    return samples


def parse_dive_rise(stream: TextIO | str, path=None) -> list[DiveRiseFixes]:
    out = []
    for line, row in _reader(stream, DIVE_RISE_COLUMNS, path):
        try:
            dev = int(row["device_id"])
            dive = GpsFix(dev, parse_timestamp(row["dive_time"]), GeodeticPoint(float(row["dive_lat"]), float(row["dive_lon"])))
            rise = GpsFix(dev, parse_timestamp(row["rise_time"]), GeodeticPoint(float(row["rise_lat"]), float(row["rise_lon"])))
            out.append(DiveRiseFixes(dev, dive, rise))
        except ValueError as exc:
            raise _row_error(exc, line, path) from None
    return out


# -- serialisation ----------------------------------------------------------------


def _writer(stream, columns):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    return w


def write_ping_log(records: Iterable[PingRecord], stream: TextIO, digits: int = 6) -> None:
    w = _writer(stream, PING_COLUMNS)
    for r in records:
        w.writerow([r.device, r.direction.value, r.peer, format_timestamp(r.timestamp_utc, digits)])


def write_gps_log(fixes: Iterable[GpsFix], stream: TextIO, digits: int = 6) -> None:
    w = _writer(stream, GPS_COLUMNS)
    for f in fixes:
        w.writerow(
            [f.device, format_timestamp(f.timestamp_utc, digits),
             f"{f.position.latitude_deg:.10f}", f"{f.position.longitude_deg:.10f}"]
        )


def write_depth_log(samples: Iterable[DepthSample], stream: TextIO, digits: int = 6) -> None:
    w = _writer(stream, DEPTH_COLUMNS)
    for s in samples:
        w.writerow([s.device, format_timestamp(s.timestamp_utc, digits), f"{s.depth_m:.6f}"])


def write_dive_rise(entries: Iterable[DiveRiseFixes], stream: TextIO, digits: int = 6) -> None:
    w = _writer(stream, DIVE_RISE_COLUMNS)
    for e in entries:
        d, r = e.dive_fix, e.rise_fix
        w.writerow(
            [e.device,
             format_timestamp(d.timestamp_utc, digits), f"{d.position.latitude_deg:.10f}", f"{d.position.longitude_deg:.10f}",
             format_timestamp(r.timestamp_utc, digits), f"{r.position.latitude_deg:.10f}", f"{r.position.longitude_deg:.10f}"]
        )


# -- interpolation --------------------------------------------------------------


def _interp(times: np.ndarray, values: np.ndarray, t, limit: float, what: str):
    if times.size == 0:
        raise OutOfRangeError(f"empty {what}")
    t = np.asarray(t, dtype=float)
    lo = times[0] - limit
    hi = times[-1] + limit
    if np.any(t < lo) or np.any(t > hi) or not np.all(np.isfinite(t)):
        raise OutOfRangeError(
            f"t outside {what} span [{times[0]:.3f}, {times[-1]:.3f}] +/- {limit} s"
        )
    # np.interp clamps to end values, which is the extrapolation rule
    return np.interp(t, times, values)


class GpsTrack:
    """Time-sorted GPS fixes of one device, interpolated piecewise-linearly."""

    def __init__(self, fixes: list[GpsFix], extrapolation_s: float = DEFAULT_EXTRAPOLATION_S):
        fixes = sorted(fixes, key=lambda f: f.timestamp_utc)
        self.device = fixes[0].device if fixes else None
        self.fixes = fixes
        self.times = np.array([f.timestamp_utc for f in fixes], dtype=float)
        self.lat = np.array([f.position.latitude_deg for f in fixes], dtype=float)
        self.lon = np.array([f.position.longitude_deg for f in fixes], dtype=float)
        self.extrapolation_s = extrapolation_s

    def __len__(self):
        return len(self.fixes)

    def latlon_at(self, t):
        """Return ``(lat, lon)`` arrays at time(s) ``t``."""
        lat = _interp(self.times, self.lat, t, self.extrapolation_s, "GPS track")
        lon = _interp(self.times, self.lon, t, self.extrapolation_s, "GPS track")
        return lat, lon

    def at(self, t: float) -> GeodeticPoint:
        lat, lon = self.latlon_at(t)
        return GeodeticPoint(float(lat), float(lon))


class DepthSeries:
    def __init__(self, samples: list[DepthSample], extrapolation_s: float = DEFAULT_EXTRAPOLATION_S):
        samples = sorted(samples, key=lambda s: s.timestamp_utc)
        self.device = samples[0].device if samples else None
        self.samples = samples
        self.times = np.array([s.timestamp_utc for s in samples], dtype=float)
        self.depth = np.array([s.depth_m for s in samples], dtype=float)
        self.extrapolation_s = extrapolation_s

    def __len__(self):
        return len(self.samples)

    def at(self, t):
        return _interp(self.times, self.depth, t, self.extrapolation_s, "depth series")


def interpolate_track(fixes: list[GpsFix], t: float, extrapolation_s: float = DEFAULT_EXTRAPOLATION_S) -> GeodeticPoint:
    """Position at ``t`` by linear interpolation in latitude/longitude."""
    if not fixes:
        raise OutOfRangeError("empty GPS track")
    return GpsTrack(fixes, extrapolation_s).at(t)


def interpolate_depth(samples: list[DepthSample], t: float, extrapolation_s: float = DEFAULT_EXTRAPOLATION_S) -> float:
    if not samples:
        raise OutOfRangeError("empty depth series")
    return float(DepthSeries(samples, extrapolation_s).at(t))


# -- deployment bundle ------------------------------------------------------------


@dataclass
class DeploymentLogs:
    """Everything parsed from one deployment's log directories."""

    pings: list[PingRecord]
    gps: dict[int, GpsTrack] = field(default_factory=dict)
    depth: dict[int, DepthSeries] = field(default_factory=dict)
    dive_rise: dict[int, DiveRiseFixes] = field(default_factory=dict)

    @classmethod
    def from_records(cls, pings, gps_fixes=(), depth_samples=(), dive_rise=(),
                     extrapolation_s: float = DEFAULT_EXTRAPOLATION_S):
        by_dev: dict[int, list] = {}
        for f in gps_fixes:
            by_dev.setdefault(f.device, []).append(f)
        gps = {d: GpsTrack(v, extrapolation_s) for d, v in sorted(by_dev.items())}
        by_dev = {}
        for s in depth_samples:
            by_dev.setdefault(s.device, []).append(s)
        depth = {d: DepthSeries(v, extrapolation_s) for d, v in sorted(by_dev.items())}
        pings = sorted(pings, key=lambda r: (r.timestamp_utc, r.device, r.direction.value, r.peer))
        return cls(pings, gps, depth, {e.device: e for e in dive_rise})

    @property
    def slb_ids(self) -> list[int]:
        """Devices with a continuous GPS track are surface buoys."""
        return sorted(self.gps)

    def device_kind(self, device: int) -> DeviceKind:
        return DeviceKind.SLB if device in self.gps else DeviceKind.FLOAT

    def without_device_logs(self, device: int) -> "DeploymentLogs":
        """Copy with everything logged *by* ``device`` removed (an unrecovered float)."""
        return DeploymentLogs(
            [p for p in self.pings if p.device != device],
            {k: v for k, v in self.gps.items() if k != device},
            {k: v for k, v in self.depth.items() if k != device},
            {k: v for k, v in self.dive_rise.items() if k != device},
        )

    def require_float_inputs(self, device: int) -> None:
        if device not in self.depth:
            raise PreconditionError(f"device {device}: no depth log")
        if device not in self.dive_rise:
            raise PreconditionError(f"device {device}: no dive/rise fixes")


def _csv_files(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise PreconditionError(f"not a directory: {directory}")
    return sorted(directory.glob("*.csv"))


def _header(path: Path) -> list[str]:
    with open(path, newline="") as fh:
        first = fh.readline()
    return [h.strip() for h in first.strip().split(",")]


def load_logs(pings_dir, gps_dir, depth_dir=None, extrapolation_s: float = DEFAULT_EXTRAPOLATION_S) -> DeploymentLogs:
    """Read every CSV in the log directories.

    Files in ``gps_dir`` are dispatched on their header: GPS tracks or dive/rise
    fixes.
    """
    pings: list[PingRecord] = []
    for path in _csv_files(pings_dir):
        with open(path, newline="") as fh:
            pings.extend(parse_ping_log(fh, path=path))
    fixes: list[GpsFix] = []
    dive_rise: list[DiveRiseFixes] = []
    for path in _csv_files(gps_dir):
        header = _header(path)
        with open(path, newline="") as fh:
            if all(c in header for c in DIVE_RISE_COLUMNS):
                dive_rise.extend(parse_dive_rise(fh, path=path))
            else:
                fixes.extend(parse_gps_log(fh, path=path))
    samples: list[DepthSample] = []
    if depth_dir is not None:
        for path in _csv_files(depth_dir):
            with open(path, newline="") as fh:
                samples.extend(parse_depth_log(fh, path=path))
    return DeploymentLogs.from_records(pings, fixes, samples, dive_rise, extrapolation_s)
