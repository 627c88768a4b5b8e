"""End-to-end localization: ranges -> groups -> solves -> bounds -> filter."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diagnostics import NO_POSITION, Diagnostics
from .errors import (
    DegenerateGeometryError, InvalidInputError, OutOfRangeError, PreconditionError, SolverError,
)
from .geo import GeodeticPoint, NedPoint, ReferenceOrigin, geodetic_to_ned, ned_to_geodetic_arrays
from .grouping import PingGroup, build_groups
from .ingest import DeploymentLogs, Direction
from .ranging import RangingConfig, build_measurements
from .simulator import ErrorStats, Evaluation, GroundTruth, evaluate
from .solver import (
    Arrival, SolveResult, SolverConfig, anchors_to_ned, initial_guess, order_arrivals,
    tdoa_localize, trilaterate,
)
from .uncertainty import (
    CrlbConfig, Method, PositionEstimate, apply_filter, fisher_information, sigmas_or_nan,
    tdoa_fisher_information,
)


class Mode(enum.Enum):
    TOF = "tof"
    TDOA = "tdoa"
    EVAL_SLB = "eval-slb"


@dataclass(frozen=True)
class RunConfig:
    ranging: RangingConfig
    reference: ReferenceOrigin
    solver: SolverConfig = SolverConfig()
    crlb: CrlbConfig = CrlbConfig()
    grouping_window_s: float = 5.0
    targets: tuple[int, ...] = ()
    mode: Mode = Mode.TOF
    slb_ids: tuple[int, ...] = ()
    slb_guess_offset_s: float = 60.0

    def anchors(self, logs: DeploymentLogs) -> list[int]:
        if not self.slb_ids:
            return logs.slb_ids
        missing = [d for d in self.slb_ids if d not in logs.gps]
        if missing:
            raise PreconditionError(f"configured buoys {missing} have no GPS log")
        return list(self.slb_ids)

    def resolve_targets(self, logs: DeploymentLogs) -> list[int]:
        anchors = set(self.anchors(logs))
        if self.targets:
            return list(self.targets)
        if self.mode is Mode.EVAL_SLB:
            return sorted(anchors)
        if self.mode is Mode.TDOA:
            return sorted({p.device for p in logs.pings if p.direction is Direction.SENT} - anchors)
        return sorted(set(logs.depth) & set(logs.dive_rise) - anchors)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            ref = data["reference"]
            reference = ReferenceOrigin.at(float(ref["lat_deg"]), float(ref["lon_deg"]),
                                           float(ref.get("height_m", 0.0)))
            ranging = RangingConfig(**data["ranging"])
        except KeyError as exc:
            raise InvalidInputError(f"run config missing {exc}") from None
        except TypeError as exc:
            raise InvalidInputError(f"bad run config: {exc}") from None
        return cls(
            ranging=ranging,
            reference=reference,
            solver=SolverConfig(**data.get("solver", {})),
            crlb=CrlbConfig(**data.get("crlb", {})),
            grouping_window_s=float(data.get("grouping_window_s", 5.0)),
            targets=tuple(int(t) for t in data.get("targets", ())),
            mode=Mode(data.get("mode", "tof")),
            slb_ids=tuple(int(t) for t in data.get("slb_ids", ())),
            slb_guess_offset_s=float(data.get("slb_guess_offset_s", 60.0)),
        )


def load_run_config(path) -> RunConfig:
    """Read a run configuration TOML file (see README for the schema)."""
    from .simulator import _load_toml

    return RunConfig.from_dict(_load_toml(path))


# -- per-group steps ----------------------------------------------------------------


def _finish(target: int, group_id: int, t_center: float, sol: SolveResult, fim,
            n_slbs: int, method: Method, cfg: RunConfig) -> PositionEstimate:
    sx, sy, ok = sigmas_or_nan(fim, cfg.crlb.condition_limit)
    p = sol.position_ned
    lat, lon, _ = ned_to_geodetic_arrays(p.north_m, p.east_m, 0.0, cfg.reference)
    est = PositionEstimate(
        float=target, group_id=group_id, t_center=t_center,
        position=GeodeticPoint(float(lat), float(lon), -p.down_m),
        position_ned=p, cost=sol.cost, sigma_x_m=sx, sigma_y_m=sy, n_slbs=n_slbs,
        method=method, converged=sol.converged, well_conditioned=ok,
    )
    return apply_filter(est, cfg.crlb)


def _fim_or_none(fn, p, anchors, sigma2):
    try:
        return fn(p, anchors, sigma2)
    except DegenerateGeometryError:
        return None


def solve_group(group: PingGroup, guess: NedPoint, cfg: RunConfig) -> PositionEstimate:
    """Trilaterate one group and attach its bounds and acceptance flag."""
    anchors = anchors_to_ned([m.slb_position for m in group.members], cfg.reference)
    ranges = [m.d_horizontal_m for m in group.members]
    sol = trilaterate(anchors, ranges, guess, cfg.solver)
    fim = _fim_or_none(fisher_information, sol.position_ned, anchors, cfg.crlb.noise_variance_m2)
    return _finish(group.float, group.group_id, group.t_center, sol, fim, len(group.members), Method.TOF, cfg)


def _estimates_from_groups(groups, guess_fn, cfg, diag) -> list[PositionEstimate]:
    out = []
    for g in groups:
        try:
            est = solve_group(g, guess_fn(g), cfg)
        except SolverError as exc:
            diag.notes.append(f"device {g.float} group {g.group_id}: {exc}")
            continue
        out.append(est)
    return out


def _tally(estimates, diag: Diagnostics) -> None:
    diag.estimates += len(estimates)
    for e in estimates:
        if e.accepted:
            diag.accepted += 1
        else:
            diag.rejected[e.reject_reason.value] += 1


def _count_grouped(measurements, groups, diag: Diagnostics) -> None:
    used = {id(m) for g in groups for m in g.members}
    grouped = sum(1 for m in measurements if id(m) in used)
    diag.grouped += grouped
    diag.ungrouped += len(measurements) - grouped
    diag.groups += len(groups)


def _sorted(estimates):
    return sorted(estimates, key=lambda e: (e.float, e.t_center, e.group_id))


# -- modes ---------------------------------------------------------------------------


def localize_float(logs: DeploymentLogs, cfg: RunConfig,
                   diagnostics: Optional[Diagnostics] = None) -> list[PositionEstimate]:
    """Time-of-flight localization of every configured float.

    Returns all estimates, accepted and rejected, sorted by (device, time).
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    anchors = cfg.anchors(logs)
    targets = cfg.resolve_targets(logs)
    for target in targets:
        logs.require_float_inputs(target)
    estimates = []
    for target in targets:
        ms = build_measurements(logs, target, anchors, cfg.ranging, diagnostics=diag)
        groups = build_groups(ms, cfg.grouping_window_s)
        _count_grouped(ms, groups, diag)
        fixes = logs.dive_rise[target]
        depth = logs.depth[target]

        def guess(g, fixes=fixes, depth=depth):
            p = geodetic_to_ned(initial_guess(fixes, g.t_center), cfg.reference)
            return NedPoint(p.north_m, p.east_m, float(depth.at(g.t_center)))

        estimates.extend(_estimates_from_groups(groups, guess, cfg, diag))
    estimates = _sorted(estimates)
    _tally(estimates, diag)
    return estimates


def _slb_guess(logs: DeploymentLogs, target: int, cfg: RunConfig):
    track = logs.gps[target]

    def guess(g):
        t = max(g.t_center - cfg.slb_guess_offset_s, float(track.times[0]))
        p = geodetic_to_ned(track.at(t), cfg.reference)
        return NedPoint(p.north_m, p.east_m, cfg.ranging.slb_depth_m)

    return guess


def gps_truth(logs: DeploymentLogs, devices: Sequence[int], ref: ReferenceOrigin) -> GroundTruth:
    tracks = {}
    for dev in devices:
        tr = logs.gps[dev]
        tracks[dev] = np.column_stack([tr.times, tr.lat, tr.lon, np.zeros(len(tr))])
    return GroundTruth.from_tracks(ref, tracks)


def evaluate_slb_mode(logs: DeploymentLogs, cfg: RunConfig,
                      diagnostics: Optional[Diagnostics] = None) -> tuple[list[PositionEstimate], Evaluation]:
    """Localize buoys as if they were floats and score them against their own GPS."""
    diag = diagnostics if diagnostics is not None else Diagnostics()
    anchors = cfg.anchors(logs)
    targets = cfg.resolve_targets(logs)
    for target in targets:
        if target not in logs.gps:
            raise PreconditionError(f"device {target}: not in GPS log")
    estimates = []
    for target in targets:
        others = [a for a in anchors if a != target]
        ms = build_measurements(logs, target, others, cfg.ranging,
                                target_depth_m=cfg.ranging.slb_depth_m, diagnostics=diag)
        groups = build_groups(ms, cfg.grouping_window_s)
        _count_grouped(ms, groups, diag)
        diag.notes.append(f"device {target}: initial guess = own GPS at t - {cfg.slb_guess_offset_s:g} s")
        estimates.extend(_estimates_from_groups(groups, _slb_guess(logs, target, cfg), cfg, diag))
    estimates = _sorted(estimates)
    _tally(estimates, diag)
    if not estimates:
        return estimates, Evaluation({}, {}, ErrorStats.of([]), ErrorStats.of([]), {})
    return estimates, evaluate(estimates, gps_truth(logs, targets, cfg.reference))


@dataclass
class ArrivalGroup:
    group_id: int
    target: int
    arrivals: list[Arrival] = field(default_factory=list)


def group_arrivals(arrivals: Sequence[Arrival], t_g: float, target: int = 0) -> list[ArrivalGroup]:
    """Consecutive, non-overlapping windows ``[t_first, t_first + t_g]`` over arrival
    times; one arrival per receiver (the earliest); windows with < 3 receivers dropped."""
    arr = sorted(arrivals, key=lambda a: (a.t_arrival, a.device))
    groups = []
    i = 0
    while i < len(arr):
        t0 = arr[i].t_arrival
        j = i
        seen = {}
        while j < len(arr) and arr[j].t_arrival <= t0 + t_g:
            seen.setdefault(arr[j].device, arr[j])
            j += 1
        if len(seen) >= 3:
            groups.append(ArrivalGroup(len(groups), target, order_arrivals(seen.values())))
        i = j
    return groups


def localize_tdoa(logs: DeploymentLogs, cfg: RunConfig,
                  diagnostics: Optional[Diagnostics] = None) -> list[PositionEstimate]:
    """Arrival-time-difference fallback for transmit-only targets."""
    diag = diagnostics if diagnostics is not None else Diagnostics()
    anchors = set(cfg.anchors(logs))
    c = cfg.ranging.sound_speed_mps
    estimates = []
    for target in cfg.resolve_targets(logs):
        recs = [p for p in logs.pings
                if p.direction is Direction.RECEIVED and p.peer == target and p.device in anchors]
        diag.receptions += len(recs)
        arrivals = []
        for r in recs:
            try:
                pos = logs.gps[r.device].at(r.timestamp_utc)
            except OutOfRangeError:
                diag.drop(NO_POSITION)
                continue
            arrivals.append((r.device, r.timestamp_utc, pos))
        if arrivals:
            xy = anchors_to_ned([a[2] for a in arrivals], cfg.reference)
            arrivals = [Arrival(NedPoint(n, e), t, dev) for (dev, t, _), (e, n) in zip(arrivals, xy)]
        diag.surviving += len(arrivals)
        groups = group_arrivals(arrivals, cfg.grouping_window_s, target)
        n_grouped = sum(len(g.arrivals) for g in groups)
        diag.grouped += n_grouped
        diag.ungrouped += len(arrivals) - n_grouped
        diag.groups += len(groups)
        if not groups:
            diag.notes.append(f"device {target}: no window with >= 3 receiving buoys")
        for g in groups:
            try:
                sol = tdoa_localize(g.arrivals, c, cfg.solver)
            except SolverError as exc:
                diag.notes.append(f"device {target} group {g.group_id}: {exc}")
                continue
            ref = g.arrivals[0]
            p = sol.position_ned
            t_emit = ref.t_arrival - cfg.ranging.processing_delay_s - math.hypot(
                p.east_m - ref.position.east_m, p.north_m - ref.position.north_m) / c
            fim = _fim_or_none(tdoa_fisher_information, p, [a.position for a in g.arrivals],
                               cfg.crlb.noise_variance_m2)
            estimates.append(_finish(target, g.group_id, t_emit, sol, fim, len(g.arrivals), Method.TDOA, cfg))
    estimates = _sorted(estimates)
    _tally(estimates, diag)
    return estimates


def run(logs: DeploymentLogs, cfg: RunConfig, diagnostics: Optional[Diagnostics] = None):
    """Dispatch on ``cfg.mode``; returns ``(estimates, evaluation or None)``."""
    if cfg.mode is Mode.TOF:
        return localize_float(logs, cfg, diagnostics), None
    if cfg.mode is Mode.TDOA:
        return localize_tdoa(logs, cfg, diagnostics), None
    return evaluate_slb_mode(logs, cfg, diagnostics)
