"""Sliding-window grouping of ranges into trilateration sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ranging import RangeMeasurement

MIN_UNIQUE_SLBS = 3


@dataclass(frozen=True)
class PingGroup:
    group_id: int
    float: int
    t_center: float
    members: tuple[RangeMeasurement, ...]

    @property
    def slbs(self) -> tuple[int, ...]:
        return tuple(m.slb for m in self.members)

    @property
    def span_s(self) -> float:
        ts = [m.t_send for m in self.members]
        return max(ts) - min(ts)


def _window_members(ms: Sequence[RangeMeasurement], anchor: int, t_g: float) -> list[int]:
    """Indices in the window anchored at ``ms[anchor]``, one per anchor buoy.

    For a repeated buoy the member whose send time is nearest the anchor is kept;
    ``ms`` is sorted so ties resolve to the earlier entry.
    """
    t0 = ms[anchor].t_send
    best: dict[int, int] = {}
    i = anchor
    while i > 0 and ms[i - 1].t_send >= t0:
        i -= 1
    while i < len(ms) and ms[i].t_send <= t0 + t_g:
        slb = ms[i].slb
        if slb not in best or ms[i].t_send - t0 < ms[best[slb]].t_send - t0:
            best[slb] = i
        i += 1
    return sorted(best.values())


def build_groups(measurements: Sequence[RangeMeasurement], t_g: float = 5.0,
                 min_slbs: int = MIN_UNIQUE_SLBS) -> list[PingGroup]:
    """Anchor a window ``[t, t + t_g]`` at every send time and keep windows that
    see at least ``min_slbs`` distinct buoys. Identical member sets are emitted
    once. Groups are built per target and numbered from 0 per target.
    """
    by_target: dict[int, list[RangeMeasurement]] = {}
    for m in measurements:
        by_target.setdefault(m.target, []).append(m)

    groups = []
    for target in sorted(by_target):
        ms = sorted(by_target[target], key=RangeMeasurement.sort_key)
        seen = set()
        gid = 0
        for anchor in range(len(ms)):
            idx = _window_members(ms, anchor, t_g)
            if len(idx) < min_slbs:
                continue
            key = tuple(idx)
            if key in seen:
                continue
            seen.add(key)
            members = tuple(ms[i] for i in idx)
            t_center = sum(m.t_send for m in members) / len(members)
            groups.append(PingGroup(gid, target, t_center, members))
            gid += 1
    return groups
