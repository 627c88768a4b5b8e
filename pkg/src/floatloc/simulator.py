"""Synthetic deployments with known ground truth.

Buoys and floats drift with a uniform current plus a per-device
Ornstein-Uhlenbeck velocity perturbation. Every device pings once per
``ping_interval_s`` in a fixed round-robin slot; each other device within
acoustic range logs the arrival, possibly corrupted by Gaussian range noise, a
multipath delay, or dropped altogether.

Trajectories are sampled at 1 Hz and are *defined* as the piecewise-linear
interpolation of those samples, so the logs are exact samples of the truth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, OutOfRangeError
from .geo import ReferenceOrigin, geodetic_to_ned_arrays, ned_to_geodetic_arrays
from .ingest import (
    DepthSample, DeploymentLogs, Direction, DiveRiseFixes, GpsFix, PingRecord,
    format_timestamp, parse_timestamp, write_depth_log, write_dive_rise, write_gps_log,
    write_ping_log,
)
from .geo import GeodeticPoint

TRUTH_COLUMNS = ("device_id", "timestamp_utc_iso8601", "lat_deg", "lon_deg", "depth_m")
FLOAT_ID_BASE = 101


@dataclass(frozen=True)
class ScenarioConfig:
    n_slbs: int = 5
    n_floats: int = 2
    duration_s: float = 1800.0
    current_mps: tuple[float, float] = (0.0, -1.0)  # (east, north)
    ping_interval_s: float = 10.0
    range_noise_std_m: float = 0.0
    multipath_probability: float = 0.0
    multipath_extra_delay_s: tuple[float, float] = (0.3, 0.8)
    dropout_probability: float = 0.0
    sound_speed_mps: float = 1480.0
    rng_seed: int = 0
    processing_delay_s: float = 0.0
    slb_depth_m: float = 3.0
    max_range_m: float = 2000.0
    origin_lat_deg: float = 47.45
    origin_lon_deg: float = -122.38
    start_time: str = "2025-04-27T18:00:00Z"
    slb_ring_radius_m: float = 400.0
    float_spread_m: float = 150.0
    slb_drift_std_mps: float = 0.05
    float_drift_std_mps: float = 0.05
    drift_correlation_s: float = 300.0
    depth_levels_m: tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 25.0)
    depth_period_s: float = 600.0
    vertical_speed_mps: float = 0.2

    def __post_init__(self):
        for name in ("multipath_probability", "dropout_probability"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1), got {p}")
        for name in ("duration_s", "ping_interval_s", "sound_speed_mps", "max_range_m",
                     "drift_correlation_s", "depth_period_s", "vertical_speed_mps"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be > 0")
        lo, hi = self.multipath_extra_delay_s
        if not 0.0 < lo <= hi:
            raise InvalidInputError("multipath_extra_delay_s must be a positive (low, high) range")
        if self.n_slbs < 1 or self.n_floats < 0:
            raise InvalidInputError("need at least one SLB and a non-negative float count")
        if self.range_noise_std_m < 0 or any(d < 0 for d in self.depth_levels_m):
            raise InvalidInputError("noise and depths must be non-negative")

    @property
    def slb_ids(self) -> list[int]:
        return list(range(1, self.n_slbs + 1))

    @property
    def float_ids(self) -> list[int]:
        return list(range(FLOAT_ID_BASE, FLOAT_ID_BASE + self.n_floats))

    @property
    def reference(self) -> ReferenceOrigin:
        return ReferenceOrigin.at(self.origin_lat_deg, self.origin_lon_deg)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown scenario keys: {sorted(unknown)}")
        kw = dict(data)
        for key in ("current_mps", "multipath_extra_delay_s", "depth_levels_m"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        return cls(**kw)

    def replace(self, **changes) -> "ScenarioConfig":
        d = asdict(self)
        d.update(changes)
        return ScenarioConfig.from_dict(d)


@dataclass
class GroundTruth:
    """Per-device truth tracks; positions are east/north metres in ``reference``'s frame."""

    reference: ReferenceOrigin
    times: dict[int, np.ndarray]
    east: dict[int, np.ndarray]
    north: dict[int, np.ndarray]
    depth: dict[int, np.ndarray]

    @property
    def devices(self) -> list[int]:
        return sorted(self.east)

    def position_at(self, device: int, t):
        """East, north, depth at time(s) ``t`` by linear interpolation."""
        ts = self.times[device]
        t = np.asarray(t, dtype=float)
        if np.any(t < ts[0]) or np.any(t > ts[-1]):
            raise OutOfRangeError(f"time outside ground-truth span of device {device}")
        return (np.interp(t, ts, self.east[device]),
                np.interp(t, ts, self.north[device]),
                np.interp(t, ts, self.depth[device]))

    def geodetic(self, device: int):
        return ned_to_geodetic_arrays(self.north[device], self.east[device],
                                      np.zeros_like(self.east[device]), self.reference)

    def write(self, stream, digits: int = 6) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(TRUTH_COLUMNS)
        for dev in self.devices:
            lat, lon, _ = self.geodetic(dev)
            for t, la, lo, z in zip(self.times[dev], lat, lon, self.depth[dev]):
                w.writerow([dev, format_timestamp(t, digits), f"{la:.10f}", f"{lo:.10f}", f"{z:.6f}"])

    @classmethod
    def read(cls, stream, reference: ReferenceOrigin | None = None) -> "GroundTruth":
        rows: dict[int, list] = {}
        reader = csv.DictReader(stream)
        missing = [c for c in TRUTH_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise InvalidInputError(f"truth file missing columns {missing}")
        for row in reader:
            rows.setdefault(int(row["device_id"]), []).append(
                (parse_timestamp(row["timestamp_utc_iso8601"]), float(row["lat_deg"]),
                 float(row["lon_deg"]), float(row["depth_m"]))
            )
        if not rows:
            raise InvalidInputError("empty truth file")
        first = min(rows.items())[1][0]
        ref = reference or ReferenceOrigin.at(first[1], first[2])
        tracks = {dev: np.array(sorted(rs)) for dev, rs in sorted(rows.items())}
        return cls.from_tracks(ref, tracks)

    @classmethod
    def from_tracks(cls, ref: ReferenceOrigin, tracks: dict) -> "GroundTruth":
        """``tracks`` maps device -> (n, 4) array of time, lat, lon, depth."""
        times, east, north, depth = {}, {}, {}, {}
        for dev, arr in tracks.items():
            n, e, _ = geodetic_to_ned_arrays(arr[:, 1], arr[:, 2], np.zeros(len(arr)), ref)
            times[dev], east[dev], north[dev], depth[dev] = arr[:, 0], e, n, arr[:, 3]
        return cls(ref, times, east, north, depth)


@dataclass
class Simulation:
    scenario: ScenarioConfig
    pings: list[PingRecord]
    gps: list[GpsFix]
    depth: list[DepthSample]
    dive_rise: list[DiveRiseFixes]
    truth: GroundTruth
    transmissions: int = 0
    receptions: int = 0
    multipath_events: int = 0
    dropouts: int = 0
    meta: dict = field(default_factory=dict)

    def logs(self) -> DeploymentLogs:
        return DeploymentLogs.from_records(self.pings, self.gps, self.depth, self.dive_rise)

    def write(self, out_dir) -> dict[str, Path]:
        """Write the ingest CSV layout: ``pings/``, ``gps/``, ``depth/`` and ``truth.csv``."""
        out = Path(out_dir)
        for sub in ("pings", "gps", "depth"):
            (out / sub).mkdir(parents=True, exist_ok=True)
        paths = {}
        by_dev: dict[int, list[PingRecord]] = {}
        for p in self.pings:
            by_dev.setdefault(p.device, []).append(p)
        for dev in sorted(by_dev):
            recs = sorted(by_dev[dev], key=lambda r: (r.timestamp_utc, r.direction.value, r.peer))
            path = out / "pings" / f"device_{dev:03d}.csv"
            _write_text(path, lambda fh: write_ping_log(recs, fh))
        paths["pings"] = out / "pings"
        _write_text(out / "gps" / "gps.csv", lambda fh: write_gps_log(self.gps, fh))
        _write_text(out / "gps" / "dive_rise.csv", lambda fh: write_dive_rise(self.dive_rise, fh))
        _write_text(out / "depth" / "depth.csv", lambda fh: write_depth_log(self.depth, fh))
        _write_text(out / "truth.csv", self.truth.write)
        paths.update(gps=out / "gps", depth=out / "depth", truth=out / "truth.csv")
        return paths


def _write_text(path: Path, fn) -> None:
    buf = io.StringIO()
    fn(buf)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def _ou_velocity(rng, n, dt, tau, sigma):
    """Zero-mean OU velocity samples, shape (n, 2)."""
    v = np.zeros((n, 2))
    if sigma == 0.0:
        return v
    a = math.exp(-dt / tau)
    b = sigma * math.sqrt(1.0 - a * a)
    v[0] = rng.normal(0.0, sigma, 2)
    noise = rng.normal(0.0, 1.0, (n - 1, 2))
    for i in range(1, n):
        v[i] = a * v[i - 1] + b * noise[i - 1]
    return v


def _depth_profile(cfg: ScenarioConfig, times: np.ndarray, phase: int) -> np.ndarray:
    levels = cfg.depth_levels_m
    z = np.zeros(len(times))
    step = cfg.vertical_speed_mps * (times[1] - times[0]) if len(times) > 1 else 0.0
    cur = 0.0
    for i, t in enumerate(times):
        target = levels[(int(t // cfg.depth_period_s) + phase) % len(levels)]
        if i > 0:
            cur += float(np.clip(target - cur, -step, step))
        z[i] = cur
    return z


def simulate(cfg: ScenarioConfig) -> Simulation:
    """Generate logs and ground truth. Same config and seed give identical output."""
    rng = np.random.default_rng(cfg.rng_seed)
    t0 = parse_timestamp(cfg.start_time)
    margin = 15.0
    n = int(math.ceil(cfg.duration_s + margin)) + 1
    rel = np.arange(n, dtype=float)
    times = t0 + rel

    east, north, depth = {}, {}, {}
    cur = np.array(cfg.current_mps, dtype=float)
    for k, dev in enumerate(cfg.slb_ids):
        ang = 2.0 * math.pi * k / cfg.n_slbs + rng.uniform(-0.2, 0.2)
        rad = cfg.slb_ring_radius_m * rng.uniform(0.8, 1.1)
        start = np.array([rad * math.cos(ang), rad * math.sin(ang)])
        vel = cur + _ou_velocity(rng, n, 1.0, cfg.drift_correlation_s, cfg.slb_drift_std_mps)
        pos = start + np.vstack([np.zeros(2), np.cumsum(vel[:-1], axis=0)])
        east[dev], north[dev] = pos[:, 0], pos[:, 1]
        depth[dev] = np.full(n, cfg.slb_depth_m)
    for k, dev in enumerate(cfg.float_ids):
        r = cfg.float_spread_m * math.sqrt(rng.uniform())
        ang = rng.uniform(0.0, 2.0 * math.pi)
        start = np.array([r * math.cos(ang), r * math.sin(ang)])
        vel = cur + _ou_velocity(rng, n, 1.0, cfg.drift_correlation_s, cfg.float_drift_std_mps)
        pos = start + np.vstack([np.zeros(2), np.cumsum(vel[:-1], axis=0)])
        east[dev], north[dev] = pos[:, 0], pos[:, 1]
        depth[dev] = _depth_profile(cfg, rel, k)
    truth = GroundTruth(cfg.reference, {d: times for d in east}, east, north, depth)

    devices = cfg.slb_ids + cfg.float_ids
    slot = cfg.ping_interval_s / len(devices)
    pings: list[PingRecord] = []
    sim = Simulation(cfg, pings, [], [], [], truth)
    c = cfg.sound_speed_mps

    def pos3(dev, t_rel):
        return np.array([np.interp(t_rel, rel, east[dev]), np.interp(t_rel, rel, north[dev]),
                         np.interp(t_rel, rel, depth[dev])])

    n_cycles = int(math.floor(cfg.duration_s / cfg.ping_interval_s))
    for cycle in range(n_cycles):
        for k, tx in enumerate(devices):
            ts_rel = cycle * cfg.ping_interval_s + k * slot + 0.5 * slot
            if ts_rel >= cfg.duration_s:
                continue
            t_send = t0 + ts_rel
            pings.append(PingRecord(tx, Direction.SENT, tx, t_send))
            sim.transmissions += 1
            p_tx = pos3(tx, ts_rel)
            for rx in devices:
                if rx == tx:
                    continue
                u_drop, noise, u_mp, mp_delay = (
                    rng.uniform(), rng.normal(), rng.uniform(), rng.uniform(*cfg.multipath_extra_delay_s)
                )
                tr_rel = ts_rel
                for _ in range(6):
                    rng_m = float(np.linalg.norm(pos3(rx, tr_rel) - p_tx))
                    tr_rel = ts_rel + rng_m / c
                if rng_m > cfg.max_range_m:
                    continue
                if u_drop < cfg.dropout_probability:
                    sim.dropouts += 1
                    continue
                arrival = tr_rel + cfg.processing_delay_s + cfg.range_noise_std_m * noise / c
                if u_mp < cfg.multipath_probability:
                    arrival += mp_delay
                    sim.multipath_events += 1
                pings.append(PingRecord(rx, Direction.RECEIVED, tx, t0 + arrival))
                sim.receptions += 1
    pings.sort(key=lambda r: (r.timestamp_utc, r.device, r.direction.value, r.peer))

    ref = cfg.reference
    for dev in cfg.slb_ids:
        lat, lon, _ = ned_to_geodetic_arrays(north[dev], east[dev], np.zeros(n), ref)
        sim.gps.extend(GpsFix(dev, t, GeodeticPoint(float(a), float(b))) for t, a, b in zip(times, lat, lon))
    for dev in cfg.float_ids:
        sim.depth.extend(DepthSample(dev, t, float(z)) for t, z in zip(times, depth[dev]))
        lat, lon, _ = ned_to_geodetic_arrays(north[dev], east[dev], np.zeros(n), ref)
        end = int(cfg.duration_s)
        sim.dive_rise.append(DiveRiseFixes(
            dev,
            GpsFix(dev, times[0], GeodeticPoint(float(lat[0]), float(lon[0]))),
            GpsFix(dev, times[end], GeodeticPoint(float(lat[end]), float(lon[end]))),
        ))
    return sim


# -- evaluation ------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorStats:
    count: int
    mean_m: float
    median_m: float
    max_m: float
    min_m: float

    @classmethod
    def of(cls, errors) -> "ErrorStats":
        e = np.asarray(errors, dtype=float)
        if e.size == 0:
            return cls(0, math.nan, math.nan, math.nan, math.nan)
        return cls(int(e.size), float(e.mean()), float(np.median(e)), float(e.max()), float(e.min()))


@dataclass
class Evaluation:
    unfiltered: dict[int, ErrorStats]
    filtered: dict[int, ErrorStats]
    unfiltered_all: ErrorStats
    filtered_all: ErrorStats
    errors: dict[int, np.ndarray]

    def lines(self) -> list[str]:
        out = []

        def fmt(label, s):
            return (f"{label}: n={s.count} mean={s.mean_m:.3f} m median={s.median_m:.3f} m "
                    f"max={s.max_m:.3f} m min={s.min_m:.3f} m")

        for dev in sorted(self.unfiltered):
            out.append(fmt(f"device {dev} unfiltered", self.unfiltered[dev]))
            out.append(fmt(f"device {dev} filtered", self.filtered[dev]))
        out.append(fmt("all unfiltered", self.unfiltered_all))
        out.append(fmt("all filtered", self.filtered_all))
        return out


def estimate_errors(estimates, truth: GroundTruth) -> np.ndarray:
    """Horizontal distance of each estimate from the truth at its ``t_center``."""
    errs = np.full(len(estimates), np.nan)
    for i, e in enumerate(estimates):
        if e.float not in truth.east:
            continue
        try:
            te, tn, _ = truth.position_at(e.float, e.t_center)
        except OutOfRangeError:
            continue
        n, ea, _ = geodetic_to_ned_arrays(e.position.latitude_deg, e.position.longitude_deg, 0.0, truth.reference)
        errs[i] = math.hypot(float(ea) - float(te), float(n) - float(tn))
    return errs


def evaluate(estimates, truth: GroundTruth) -> Evaluation:
    """Mean/median/max/min horizontal error per device and overall, before and
    after the acceptance filter."""
    errs = estimate_errors(estimates, truth)
    ok = np.isfinite(errs)
    if len(estimates) and not ok.any():
        raise OutOfRangeError("no estimate overlaps the ground truth in device and time")
    unf, fil, per = {}, {}, {}
    accepted = np.array([e.accepted for e in estimates], dtype=bool)
    devs = np.array([e.float for e in estimates])
    for dev in sorted(set(devs[ok].tolist())):
        sel = ok & (devs == dev)
        per[dev] = errs[sel]
        unf[dev] = ErrorStats.of(errs[sel])
        fil[dev] = ErrorStats.of(errs[sel & accepted])
    return Evaluation(unf, fil, ErrorStats.of(errs[ok]), ErrorStats.of(errs[ok & accepted]), per)


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario TOML file; keys are :class:`ScenarioConfig` field names,
    optionally nested under a ``[scenario]`` table."""
    data = _load_toml(path)
    return ScenarioConfig.from_dict(data.get("scenario", data))


def _load_toml(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)
