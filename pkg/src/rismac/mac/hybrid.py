"""Hybrid MAC frames: three compositions stitching centralized scheduling and
distributed contention into a single frame.

Case 1: [pilot, compute, scheduled, competing] - the BS schedules the top
        fraction of requesting users; the rest contend in the trailing window.
Case 2: [request, compute, scheduled] - users contend to deliver requests to
        the BS, which then computes and schedules the granted ones.
Case 3: [request, reserved] - users compute locally, reserve a slot with the
        RIS-controller, and transmit collision-free in the reserved period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..config import ScenarioConfig
from ..errors import ConfigError
from ..kernel import Simulation
from ..learning import compute_time, estimation_time
from ..metrics import Recorder
from ..radio import ChannelBook
from .centralized import auto_data_slots, build_schedule
from .distributed import (MODE_DATA, MODE_RESERVE, ContentionEngine,
                          build_stations)
from .frames import (FramePlan, PERIOD_COMPETING, PERIOD_COMPUTE,
                     PERIOD_PILOT, PERIOD_REQUEST, PERIOD_RESERVED,
                     PERIOD_SCHEDULED)

CASE_LAYOUTS = {
    1: (PERIOD_PILOT, PERIOD_COMPUTE, PERIOD_SCHEDULED, PERIOD_COMPETING),
    2: (PERIOD_REQUEST, PERIOD_COMPUTE, PERIOD_SCHEDULED),
    3: (PERIOD_REQUEST, PERIOD_RESERVED),
}


@dataclass
class HybridCase:
    case: int

    def __post_init__(self) -> None:
        if self.case not in CASE_LAYOUTS:
            raise ConfigError(f"unknown hybrid case {self.case}")

    def layout(self) -> tuple:
        return CASE_LAYOUTS[self.case]


def case1_split(cfg: ScenarioConfig, num_requests: int) -> tuple[int, int]:
    """(scheduled slots, competing slots) dividing the post-compute budget."""
    budget = auto_data_slots(cfg, num_requests)
    scheduled = min(budget, max(1, math.ceil(cfg.hybrid_scheduled_frac * budget)))
    return scheduled, budget - scheduled


def compose_frame(case: HybridCase, cfg: ScenarioConfig,
                  num_requests: int = None, num_grants: int = None) -> FramePlan:
    """Period list for the case, with durations from the configuration.

    num_grants sizes the post-request periods of cases 2/3 (defaults to the
    request count: the all-granted upper bound).
    """
    if num_requests is None:
        num_requests = cfg.K
    if num_grants is None:
        num_grants = num_requests
    nsub = cfg.subchannels()
    comp = compute_time(cfg.cost_model(), num_requests, cfg.num_ris,
                        cfg.groups_per_ris())
    if case.case == 1:
        sched_slots, comp_slots = case1_split(cfg, num_requests)
        periods = [(PERIOD_PILOT, num_requests * cfg.pilot_slot_s),
                   (PERIOD_COMPUTE, comp),
                   (PERIOD_SCHEDULED, sched_slots * cfg.data_slot_s),
                   (PERIOD_COMPETING, comp_slots * cfg.data_slot_s)]
        return FramePlan(periods=periods, pilot_slots=num_requests,
                         data_slots=sched_slots, subchannels=nsub)
    if case.case == 2:
        sched_slots = max(0, math.ceil(num_grants / nsub))
        comp = compute_time(cfg.cost_model(), num_grants, cfg.num_ris,
                            cfg.groups_per_ris())
        periods = [(PERIOD_REQUEST, cfg.request_window_s),
                   (PERIOD_COMPUTE, comp),
                   (PERIOD_SCHEDULED, sched_slots * cfg.data_slot_s)]
        return FramePlan(periods=periods, data_slots=sched_slots,
                         subchannels=nsub)
    reserved_slots = max(0, math.ceil(num_grants / nsub))
    periods = [(PERIOD_REQUEST, cfg.request_window_s),
               (PERIOD_RESERVED, reserved_slots * cfg.data_slot_s)]
    return FramePlan(periods=periods, data_slots=reserved_slots,
                     subchannels=nsub)


class HybridMac:
    """Frame loop dispatching to the configured case.  Station contention
    state (contention windows, Q-tables) persists across frames."""

    def __init__(self, cfg: ScenarioConfig, recorder: Recorder):
        self.cfg = cfg
        self.rec = recorder
        self.case = HybridCase(int(cfg.protocol[-1]))
        self.frame_index = 0
        self.cost = cfg.cost_model()

    def start(self, sim: Simulation) -> None:
        self.book = ChannelBook(self.cfg, sim.rng)
        self.stations = {st.uid: st
                         for st in build_stations(self.cfg, range(self.cfg.K))}
        sim.schedule(0.0, "frame_start", actor="bs", fn=self._frame_start)

    def _frame_start(self, sim: Simulation, event) -> None:
        starters = {1: self._case1_frame, 2: self._case2_frame,
                    3: self._case3_frame}
        starters[self.case.case](sim, sim.clock)

    def _end_frame(self, sim: Simulation, t_end: float) -> None:
        sim.schedule(t_end, "frame_end", actor="bs", fn=self._frame_end)

    def _frame_end(self, sim: Simulation, event) -> None:
        self.rec.frame_done()
        self.frame_index += 1
        sim.schedule(sim.clock, "frame_start", actor="bs", fn=self._frame_start)

    # -- shared pieces ---------------------------------------------------- #

    def _bill_pilots_and_estimation(self, t0: float, users) -> None:
        cfg = self.cfg
        for i, user in enumerate(users):
            self.rec.tx(t0 + i * cfg.pilot_slot_s, cfg.pilot_slot_s,
                        f"user:{user}", cfg.tx_power_w(), PERIOD_PILOT)
        est = estimation_time(self.cost, len(users), cfg.num_ris,
                              cfg.groups_per_ris())
        if est > 0.0:
            self.rec.compute(t0, est, "bs", cfg.p_compute_bs_w, PERIOD_COMPUTE)

    def _schedule_slots(self, sim: Simulation, t0_frame: float, t_sched: float,
                        schedule, rates) -> None:
        cfg = self.cfg
        for (sub, slot), user in schedule.assignments.items():
            start = t_sched + slot * cfg.data_slot_s
            sim.schedule(start + cfg.data_slot_s, "data_slot_end",
                         actor=f"user:{user}", fn=self._data_slot_end,
                         payload={"t0": t0_frame, "start": start, "user": user,
                                  "sub": sub, "rate": rates[(user, sub)]})

    def _data_slot_end(self, sim: Simulation, event) -> None:
        cfg = self.cfg
        p = event.payload
        bits = p["rate"] * cfg.data_slot_s
        self.rec.tx(p["start"], cfg.data_slot_s, f"user:{p['user']}",
                    cfg.tx_power_w(), PERIOD_SCHEDULED, bits=bits,
                    user=p["user"], rate=p["rate"], subch=p["sub"])
        self.rec.delay(p["user"], sim.clock - p["t0"])

    def _rates_for(self, users) -> tuple[dict, dict]:
        rates, sort_rate = {}, {}
        for user in users:
            per_ris = self.book.rates_all_ris(user, self.frame_index)
            for ris in range(self.cfg.num_ris):
                rates[(user, ris)] = float(per_ris[ris])
            sort_rate[user] = float(per_ris.max())
        return rates, sort_rate

    # -- case 1 ------------------------------------------------------------ #

    def _case1_frame(self, sim: Simulation, t0: float) -> None:
        cfg = self.cfg
        users = list(range(cfg.K))
        plan = compose_frame(self.case, cfg, len(users))
        t_pilot_end = t0 + plan.period_duration(PERIOD_PILOT)
        t_comp_end = t_pilot_end + plan.period_duration(PERIOD_COMPUTE)

        def after_compute(sim2, _event):
            self._bill_pilots_and_estimation(t0, users)
            self.rec.compute(t_pilot_end, plan.period_duration(PERIOD_COMPUTE),
                             "bs", cfg.p_compute_bs_w, PERIOD_COMPUTE)
            rates, sort_rate = self._rates_for(users)
            schedule = build_schedule(users, sort_rate, plan.data_slots,
                                      plan.subchannels)
            self._schedule_slots(sim2, t0, t_comp_end, schedule, rates)
            t_sched_end = t_comp_end + plan.period_duration(PERIOD_SCHEDULED)
            t_frame_end = t_sched_end + plan.period_duration(PERIOD_COMPETING)
            unscheduled = [u for u in users if u not in schedule.users()]
            if unscheduled and plan.period_duration(PERIOD_COMPETING) > 0:
                engine = ContentionEngine(
                    cfg, self.rec, self.book,
                    [self.stations[u] for u in unscheduled],
                    period=PERIOD_COMPETING, mode=MODE_DATA,
                    local_compute=True, fixed_block=self.frame_index)
                sim2.schedule(t_sched_end, "competing_open", actor="bs",
                              fn=lambda s, e: engine.open(s, t_sched_end,
                                                          t_frame_end))
                sim2.schedule(t_frame_end, "competing_close", actor="bs",
                              fn=lambda s, e: engine.close(t_frame_end))
            self._end_frame(sim2, t_frame_end)

        sim.schedule(t_comp_end, "compute_end", actor="bs", fn=after_compute)

    # -- case 2 ------------------------------------------------------------ #

    def _case2_frame(self, sim: Simulation, t0: float) -> None:
        cfg = self.cfg
        users = list(range(cfg.K))
        grants: list = []
        engine = ContentionEngine(
            cfg, self.rec, self.book, [self.stations[u] for u in users],
            period=PERIOD_REQUEST, mode=MODE_RESERVE, local_compute=False,
            feedback_actor="bs", on_grant=lambda st, t: grants.append(st.uid),
            fixed_block=self.frame_index)
        t_req_end = t0 + cfg.request_window_s
        engine.open(sim, t0, t_req_end)

        def after_requests(sim2, _event):
            engine.close(t_req_end)
            comp = compute_time(self.cost, len(grants), cfg.num_ris,
                                cfg.groups_per_ris())
            self.rec.compute(t_req_end, comp, "bs", cfg.p_compute_bs_w,
                             PERIOD_COMPUTE)
            est = estimation_time(self.cost, len(grants), cfg.num_ris,
                                  cfg.groups_per_ris())
            if est > 0.0:
                self.rec.compute(t_req_end, est, "bs", cfg.p_compute_bs_w,
                                 PERIOD_COMPUTE)
            t_sched = t_req_end + comp
            slots = max(0, math.ceil(len(grants) / cfg.subchannels()))
            if grants:
                rates, sort_rate = self._rates_for(grants)
                schedule = build_schedule(grants, sort_rate, slots,
                                          cfg.subchannels())
                self._schedule_slots(sim2, t0, t_sched, schedule, rates)
            self._end_frame(sim2, t_sched + slots * cfg.data_slot_s)

        sim.schedule(t_req_end, "request_end", actor="bs", fn=after_requests)

    # -- case 3 ------------------------------------------------------------ #

    def _case3_frame(self, sim: Simulation, t0: float) -> None:
        cfg = self.cfg
        users = list(range(cfg.K))
        grants: list = []   # (uid, subchannel, rate at reservation)
        engine = ContentionEngine(
            cfg, self.rec, self.book, [self.stations[u] for u in users],
            period=PERIOD_REQUEST, mode=MODE_RESERVE, local_compute=True,
            feedback_actor="ris",
            on_grant=lambda st, t: grants.append(
                (st.uid, st.chosen[0], st.pending_rate)),
            fixed_block=self.frame_index)
        t_req_end = t0 + cfg.request_window_s
        engine.open(sim, t0, t_req_end)

        def after_requests(sim2, _event):
            engine.close(t_req_end)
            # One reserved slot per accepted request, back to back per
            # sub-channel; reservations never collide.
            queues: dict[int, int] = {}
            longest = 0
            for uid, sub, rate in grants:
                pos = queues.get(sub, 0)
                queues[sub] = pos + 1
                longest = max(longest, pos + 1)
                start = t_req_end + pos * cfg.data_slot_s
                sim2.schedule(start + cfg.data_slot_s, "reserved_slot_end",
                              actor=f"user:{uid}", fn=self._reserved_end,
                              payload={"t0": t0, "start": start, "user": uid,
                                       "sub": sub, "rate": rate})
            self._end_frame(sim2, t_req_end + longest * cfg.data_slot_s)

        sim.schedule(t_req_end, "request_end", actor="bs", fn=after_requests)

    def _reserved_end(self, sim: Simulation, event) -> None:
        cfg = self.cfg
        p = event.payload
        bits = p["rate"] * cfg.data_slot_s
        self.rec.tx(p["start"], cfg.data_slot_s, f"user:{p['user']}",
                    cfg.tx_power_w(), PERIOD_RESERVED, bits=bits,
                    user=p["user"], rate=p["rate"], subch=p["sub"])
        self.rec.delay(p["user"], sim.clock - p["t0"])
