"""Frame plans: ordered, timed periods making up one MAC frame."""

from __future__ import annotations

from dataclasses import dataclass, field

PERIOD_PILOT = "pilot"
PERIOD_COMPUTE = "compute"
PERIOD_SCHEDULED = "scheduled"
PERIOD_COMPETING = "competing"
PERIOD_REQUEST = "request"
PERIOD_RESERVED = "reserved"

PERIOD_KINDS = (PERIOD_PILOT, PERIOD_COMPUTE, PERIOD_SCHEDULED,
                PERIOD_COMPETING, PERIOD_REQUEST, PERIOD_RESERVED)


@dataclass
class FramePlan:
    """Ordered (kind, duration) periods plus the frame's slot bookkeeping."""

    periods: list = field(default_factory=list)  # [(kind, seconds), ...]
    pilot_slots: int = 0
    data_slots: int = 0
    subchannels: int = 1

    def duration(self) -> float:
        return sum(d for _, d in self.periods)

    def period_duration(self, kind: str) -> float:
        return sum(d for k, d in self.periods if k == kind)

    def kinds(self) -> list:
        return [k for k, _ in self.periods]
