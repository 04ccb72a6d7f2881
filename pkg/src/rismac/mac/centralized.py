"""Centralized MAC: per-sub-frame pilot period (one slot per requesting user),
a computing period priced by the cost model, and a scheduled transmission
period with TDMA inside each sub-channel.

The scheduled period is sized to the demand by default (one data slot per
requesting user, spread over the sub-channels) so the fixed computing overhead
amortizes as the user population grows; an explicit data_slots count caps the
frame instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..config import ScenarioConfig
from ..kernel import Simulation
from ..learning import compute_time, estimation_time
from ..metrics import Recorder
from ..radio import ChannelBook
from .frames import (FramePlan, PERIOD_COMPUTE, PERIOD_PILOT, PERIOD_SCHEDULED)


@dataclass
class Schedule:
    """Cell assignments: (subchannel, data-slot index) -> user id."""

    assignments: dict = field(default_factory=dict)

    def users(self) -> set:
        return set(self.assignments.values())

    def cells(self) -> int:
        return len(self.assignments)


def build_schedule(requests, rates, data_slots: int, subchannels: int) -> Schedule:
    """Round-robin assignment of rate-sorted users over (subchannel, slot) cells.

    Users are sorted by descending aligned-gain rate (ties toward the lower
    id) and cycled over the cells in slot-major order.  A user never holds two
    sub-channels in the same slot index (single radio per Tx); a slot with
    fewer distinct users than sub-channels leaves the surplus cells idle.
    """
    order = sorted(requests, key=lambda u: (-rates[u], u))
    schedule = Schedule()
    if not order:
        return schedule
    idx = 0
    for slot in range(data_slots):
        in_slot = set()
        for sub in range(subchannels):
            for probe in range(len(order)):
                user = order[(idx + probe) % len(order)]
                if user not in in_slot:
                    schedule.assignments[(sub, slot)] = user
                    in_slot.add(user)
                    idx = (idx + probe + 1) % len(order)
                    break
    return schedule


def auto_data_slots(cfg: ScenarioConfig, num_requests: int) -> int:
    """Scheduled slots per frame: explicit cap, or one slot per requester."""
    if cfg.data_slots:
        return cfg.data_slots
    return max(1, math.ceil(num_requests / cfg.subchannels()))


def compose_centralized_frame(cfg: ScenarioConfig, num_requests: int) -> FramePlan:
    """The three-period plan [pilot, compute, scheduled] with durations."""
    data_slots = auto_data_slots(cfg, num_requests)
    comp = compute_time(cfg.cost_model(), num_requests, cfg.num_ris,
                        cfg.groups_per_ris())
    return FramePlan(
        periods=[(PERIOD_PILOT, num_requests * cfg.pilot_slot_s),
                 (PERIOD_COMPUTE, comp),
                 (PERIOD_SCHEDULED, data_slots * cfg.data_slot_s)],
        pilot_slots=num_requests,
        data_slots=data_slots,
        subchannels=cfg.subchannels(),
    )


@dataclass
class SubframeOutcome:
    plan: FramePlan
    schedule: Schedule
    rates: dict            # (user, ris) -> bps at this frame's channel block
    bits_by_cell: dict     # (subchannel, slot) -> bits
    pilot_airtime: float
    compute_duration: float
    duration: float

    def bits_total(self) -> float:
        return sum(self.bits_by_cell.values())


class CentralizedMac:
    """Event-driven frame loop.  Each frame: pilots from every requesting
    user, BS estimation + configuration compute, then the scheduled slots.

    Unscheduled users (only possible under an explicit data_slots cap) re-send
    pilots next sub-frame; all users request every frame (saturated uplink).
    """

    def __init__(self, cfg: ScenarioConfig, recorder: Recorder):
        self.cfg = cfg
        self.rec = recorder
        self.frame_index = 0
        self.cost = cfg.cost_model()

    def start(self, sim: Simulation) -> None:
        self.book = ChannelBook(self.cfg, sim.rng)
        sim.schedule(0.0, "frame_start", actor="bs", fn=self._frame_start)

    # -- frame pipeline ------------------------------------------------- #

    def _frame_start(self, sim: Simulation, event) -> None:
        cfg = self.cfg
        t0 = sim.clock
        users = list(range(cfg.K))
        plan = compose_centralized_frame(cfg, len(users))
        sim.schedule(t0 + plan.period_duration(PERIOD_PILOT), "pilot_end",
                     actor="bs", fn=self._pilot_end,
                     payload={"t0": t0, "plan": plan, "users": users})

    def _pilot_end(self, sim: Simulation, event) -> None:
        cfg = self.cfg
        p = event.payload
        for i, user in enumerate(p["users"]):
            self.rec.tx(p["t0"] + i * cfg.pilot_slot_s, cfg.pilot_slot_s,
                        f"user:{user}", cfg.tx_power_w(), PERIOD_PILOT)
        # Cascaded-channel estimation DSP runs while pilots stream in:
        # energy-only, no airtime.
        est = estimation_time(self.cost, len(p["users"]), cfg.num_ris,
                              cfg.groups_per_ris())
        if est > 0.0:
            self.rec.compute(p["t0"], est, "bs", cfg.p_compute_bs_w,
                             PERIOD_COMPUTE)
        comp = p["plan"].period_duration(PERIOD_COMPUTE)
        sim.schedule(sim.clock + comp, "compute_end", actor="bs",
                     fn=self._compute_end, payload=p)

    def _compute_end(self, sim: Simulation, event) -> None:
        cfg = self.cfg
        p = event.payload
        plan = p["plan"]
        self.rec.compute(sim.clock - plan.period_duration(PERIOD_COMPUTE),
                         plan.period_duration(PERIOD_COMPUTE), "bs",
                         cfg.p_compute_bs_w, PERIOD_COMPUTE)
        rates = {}
        sort_rate = {}
        for user in p["users"]:
            per_ris = self.book.rates_all_ris(user, self.frame_index)
            for ris in range(cfg.num_ris):
                rates[(user, ris)] = float(per_ris[ris])
            sort_rate[user] = float(per_ris.max())
        schedule = build_schedule(p["users"], sort_rate, plan.data_slots,
                                  plan.subchannels)
        t_sched = sim.clock
        for (sub, slot), user in schedule.assignments.items():
            start = t_sched + slot * cfg.data_slot_s
            sim.schedule(start + cfg.data_slot_s, "data_slot_end",
                         actor=f"user:{user}", fn=self._data_slot_end,
                         payload={"t0": p["t0"], "start": start, "user": user,
                                  "sub": sub, "rate": rates[(user, sub)]})
        t_end = t_sched + plan.data_slots * cfg.data_slot_s
        sim.schedule(t_end, "frame_end", actor="bs", fn=self._frame_end)

    def _data_slot_end(self, sim: Simulation, event) -> None:
        cfg = self.cfg
        p = event.payload
        bits = p["rate"] * cfg.data_slot_s
        self.rec.tx(p["start"], cfg.data_slot_s, f"user:{p['user']}",
                    cfg.tx_power_w(), PERIOD_SCHEDULED, bits=bits,
                    user=p["user"], rate=p["rate"], subch=p["sub"])
        self.rec.delay(p["user"], sim.clock - p["t0"])

    def _frame_end(self, sim: Simulation, event) -> None:
        self.rec.frame_done()
        self.frame_index += 1
        sim.schedule(sim.clock, "frame_start", actor="bs", fn=self._frame_start)


def run_subframe(cfg: ScenarioConfig, seed: int = None,
                 frame_index: int = 0) -> SubframeOutcome:
    """Plan and price a single sub-frame (no event loop); test convenience."""
    from ..kernel import RngStreams

    cfg.validate()
    streams = RngStreams(cfg.seed if seed is None else seed)
    book = ChannelBook(cfg, streams)
    users = list(range(cfg.K))
    plan = compose_centralized_frame(cfg, len(users))
    rates = {}
    sort_rate = {}
    for user in users:
        per_ris = book.rates_all_ris(user, frame_index)
        for ris in range(cfg.num_ris):
            rates[(user, ris)] = float(per_ris[ris])
        sort_rate[user] = float(per_ris.max())
    schedule = build_schedule(users, sort_rate, plan.data_slots,
                              plan.subchannels)
    bits = {cell: rates[(user, cell[0])] * cfg.data_slot_s
            for cell, user in schedule.assignments.items()}
    return SubframeOutcome(
        plan=plan, schedule=schedule, rates=rates, bits_by_cell=bits,
        pilot_airtime=plan.period_duration(PERIOD_PILOT),
        compute_duration=plan.period_duration(PERIOD_COMPUTE),
        duration=plan.duration(),
    )
