"""Ping matching, time-of-flight ranges, depth compensation and range outlier removal."""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from . import _kernels
from .diagnostics import (
    INVALID_DEPTH, NO_MATCH, NO_POSITION, NON_POSITIVE_TOF, RANGE_RATE, Diagnostics,
)
from .errors import InvalidInputError, OutOfRangeError, PreconditionError
from .geo import GeodeticPoint
from .ingest import DeploymentLogs, Direction, PingRecord


@dataclass(frozen=True)
class RangingConfig:
    sound_speed_mps: float
    processing_delay_s: float = 0.0
    match_window_s: float = 1.5
    slb_depth_m: float = 3.0
    max_range_rate_mps: float = 0.8

    def __post_init__(self):
        for name in ("sound_speed_mps", "match_window_s", "max_range_rate_mps"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be > 0, got {v}")
        for name in ("processing_delay_s", "slb_depth_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be >= 0, got {v}")


class LinkDirection(enum.Enum):
    UPLINK = "uplink"  # target transmits, anchor receives
    DOWNLINK = "downlink"  # anchor transmits, target receives


@dataclass(frozen=True)
class RangeMeasurement:
    sender: int
    receiver: int
    slb: int
    direction: LinkDirection
    t_send: float
    t_recv: float
    tof_s: float = math.nan
    d_acoustic_m: float = math.nan
    d_horizontal_m: float = math.nan
    slb_position: Optional[GeodeticPoint] = None
    float_depth_m: float = math.nan

    @property
    def target(self) -> int:
        return self.receiver if self.sender == self.slb else self.sender

    @property
    def slb_event_time(self) -> float:
        return self.t_recv if self.direction is LinkDirection.UPLINK else self.t_send

    @property
    def float_event_time(self) -> float:
        return self.t_send if self.direction is LinkDirection.UPLINK else self.t_recv

    def sort_key(self):
        return (self.t_send, self.sender, self.receiver)


def match_pings(
    sent: Iterable[PingRecord],
    received: Iterable[PingRecord],
    cfg: RangingConfig,
    diagnostics: Diagnostics | None = None,
) -> list[tuple[PingRecord, PingRecord]]:
    """Pair each reception with the latest send of its sender inside the window.

    A pair is kept iff ``0 < t_recv - t_send < match_window_s``.
    """
    by_sender: dict[int, list[PingRecord]] = {}
    for s in sent:
        if s.direction is Direction.SENT:
            by_sender.setdefault(s.device, []).append(s)
    times = {}
    for dev, recs in by_sender.items():
        recs.sort(key=lambda r: r.timestamp_utc)
        times[dev] = [r.timestamp_utc for r in recs]

    pairs = []
    used = set()
    for r in received:
        if r.direction is not Direction.RECEIVED:
            continue
        match = None
        ts = times.get(r.peer)
        if ts:
            i = bisect.bisect_left(ts, r.timestamp_utc) - 1
            if i >= 0:
                dt = r.timestamp_utc - ts[i]
                if 0.0 < dt < cfg.match_window_s:
                    match = by_sender[r.peer][i]
        if match is None:
            if diagnostics is not None:
                diagnostics.drop(NO_MATCH)
            continue
        used.add(id(match))
        pairs.append((match, r))
    if diagnostics is not None:
        diagnostics.unmatched_sends += sum(
            1 for recs in by_sender.values() for s in recs if id(s) not in used
        )
    return pairs


def compute_tof(pair: tuple[PingRecord, PingRecord], cfg: RangingConfig, slb: int) -> Optional[RangeMeasurement]:
    """Time of flight and acoustic distance for a matched pair; None if ToF <= 0.

    ``slb`` names the anchor side of the pair, which fixes the link direction.
    """
    send, recv = pair
    tof = recv.timestamp_utc - send.timestamp_utc - cfg.processing_delay_s
    if not tof > 0.0:
        return None
    direction = LinkDirection.DOWNLINK if send.device == slb else LinkDirection.UPLINK
    return RangeMeasurement(
        sender=send.device,
        receiver=recv.device,
        slb=slb,
        direction=direction,
        t_send=send.timestamp_utc,
        t_recv=recv.timestamp_utc,
        tof_s=tof,
        d_acoustic_m=cfg.sound_speed_mps * tof,
    )


def depth_compensate(m: RangeMeasurement, cfg: RangingConfig) -> Optional[RangeMeasurement]:
    """Project the acoustic slant range onto the horizontal plane.

    Returns None when the slant range is shorter than the depth offset.
    """
    dz = m.float_depth_m - cfg.slb_depth_m
    if not math.isfinite(dz):
        raise InvalidInputError("float depth not set on measurement")
    if m.d_acoustic_m < abs(dz):
        return None
    return replace(m, d_horizontal_m=math.sqrt(m.d_acoustic_m * m.d_acoustic_m - dz * dz))


def filter_range_rate(measurements: Iterable[RangeMeasurement], cfg: RangingConfig,
                      diagnostics: Diagnostics | None = None) -> list[RangeMeasurement]:
    """Drop ranges implying a horizontal range rate above the limit.

    Each (target, anchor) chain is walked in send-time order and compared against
    its last accepted member.
    """
    chains: dict[tuple[int, int], list[RangeMeasurement]] = {}
    for m in measurements:
        chains.setdefault((m.target, m.slb), []).append(m)
    kept = []
    for key in sorted(chains):
        chain = sorted(chains[key], key=RangeMeasurement.sort_key)
        mask = _kernels.range_rate_mask(
            [m.t_send for m in chain], [m.d_horizontal_m for m in chain], cfg.max_range_rate_mps
        )
        for m, ok in zip(chain, mask):
            if ok:
                kept.append(m)
            elif diagnostics is not None:
                diagnostics.drop(RANGE_RATE)
    kept.sort(key=RangeMeasurement.sort_key)
    return kept


def build_measurements(
    logs: DeploymentLogs,
    target: int,
    anchors: Iterable[int],
    cfg: RangingConfig,
    target_depth_m: float | None = None,
    diagnostics: Diagnostics | None = None,
) -> list[RangeMeasurement]:
    """Run the ranging chain for one target against the given anchor buoys.

    Depth comes from the target's depth log unless ``target_depth_m`` fixes it.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    anchors = set(anchors) - {target}
    sent = [p for p in logs.pings if p.direction is Direction.SENT and (p.device == target or p.device in anchors)]
    received = [
        p for p in logs.pings
        if p.direction is Direction.RECEIVED
        and ((p.device == target and p.peer in anchors) or (p.device in anchors and p.peer == target))
    ]
    diag.receptions += len(received)
    pairs = match_pings(sent, received, cfg, diag)

    depth = None
    if target_depth_m is None:
        if target not in logs.depth:
            raise PreconditionError(f"device {target}: no depth log")
        depth = logs.depth[target]
    measurements = []
    for send, recv in pairs:
        slb = recv.device if send.device == target else send.device
        m = compute_tof((send, recv), cfg, slb)
        if m is None:
            diag.drop(NON_POSITIVE_TOF)
            continue
        try:
            pos = logs.gps[slb].at(m.slb_event_time)
            z = target_depth_m if depth is None else float(depth.at(m.float_event_time))
        except (KeyError, OutOfRangeError):
            diag.drop(NO_POSITION)
            continue
        m = depth_compensate(replace(m, slb_position=pos, float_depth_m=z), cfg)
        if m is None:
            diag.drop(INVALID_DEPTH)
            continue
        measurements.append(m)

    kept = filter_range_rate(measurements, cfg, diag)
    diag.surviving += len(kept)
    diag.uplink += sum(m.direction is LinkDirection.UPLINK for m in kept)
    diag.downlink += sum(m.direction is LinkDirection.DOWNLINK for m in kept)
    return kept
