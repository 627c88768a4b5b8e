"""Per-stage counters for the run report."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

# measurement-level drop reasons, in pipeline order
NO_MATCH = "no-match"
NON_POSITIVE_TOF = "non-positive-tof"
NO_POSITION = "no-position"
INVALID_DEPTH = "invalid-depth-discriminant"
RANGE_RATE = "range-rate"
DROP_REASONS = (NO_MATCH, NON_POSITIVE_TOF, NO_POSITION, INVALID_DEPTH, RANGE_RATE)


@dataclass
class Diagnostics:
    receptions: int = 0
    unmatched_sends: int = 0
    dropped: Counter = field(default_factory=Counter)
    surviving: int = 0
    uplink: int = 0
    downlink: int = 0
    grouped: int = 0
    ungrouped: int = 0
    groups: int = 0
    estimates: int = 0
    accepted: int = 0
    rejected: Counter = field(default_factory=Counter)
    notes: list = field(default_factory=list)

    def drop(self, reason: str, n: int = 1) -> None:
        self.dropped[reason] += n

    def is_conserved(self) -> bool:
        """Every reception is either surviving or dropped under one reason, and
        every survivor is grouped or not; every estimate is accepted or rejected."""
        return (
            self.receptions == self.surviving + sum(self.dropped.values())
            and self.surviving == self.grouped + self.ungrouped
            and self.estimates == self.accepted + sum(self.rejected.values())
        )

    def merge(self, other: "Diagnostics") -> None:
        for name in ("receptions", "unmatched_sends", "surviving", "uplink", "downlink",
                     "grouped", "ungrouped", "groups", "estimates", "accepted"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.dropped.update(other.dropped)
        self.rejected.update(other.rejected)
        self.notes.extend(other.notes)

    def lines(self) -> list[str]:
        out = [
            f"receptions considered: {self.receptions}",
            f"unmatched sends: {self.unmatched_sends}",
        ]
        for reason in DROP_REASONS:
            out.append(f"dropped [{reason}]: {self.dropped.get(reason, 0)}")
        out += [
            f"surviving ranges: {self.surviving} (uplink {self.uplink}, downlink {self.downlink})",
            f"grouped ranges: {self.grouped}, ungrouped: {self.ungrouped}",
            f"groups: {self.groups}",
            f"estimates: {self.estimates}, accepted: {self.accepted}",
        ]
        for reason, n in sorted(self.rejected.items()):
            out.append(f"rejected [{reason}]: {n}")
        rate = self.accepted / self.estimates if self.estimates else 0.0
        out.append(f"acceptance rate: {rate:.3f}")
        out.extend(f"note: {n}" for n in self.notes)
        return out
