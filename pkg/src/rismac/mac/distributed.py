"""Distributed MAC: per-sub-channel carrier sensing with DIFS waits, slotted
random backoff, a configuration request/feedback handshake with the
RIS-controller, then the data slot.

The engine is channel-centric: stations in backoff are decremented lazily at
busy/idle transitions, so event count scales with transmissions rather than
with stations.  Backoff slots share the channel's idle-window grid, which
makes equal countdowns expire at exactly the same instant (a collision);
distinct countdowns always differ by whole slots, so a later station senses
the earlier request and defers.

A station computes its RIS configuration once per access attempt, before the
request: the compute runs on the station's own processor concurrently with
its DIFS wait and backoff countdown, so the request goes out at
max(countdown end, compute end).  The channel is never held during compute;
if it outlasts the countdown and someone else seizes the medium meanwhile,
the station re-enters backoff without a contention-window penalty (the
explicit denial case is governed by deny_doubles_cw instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..config import ScenarioConfig
from ..errors import ConfigError
from ..kernel import Simulation
from ..learning import QTable, compute_time, rate_bucket, reward
from ..metrics import Recorder
from ..radio import ChannelBook

_SLOT_EPS = 1e-9


@dataclass
class DcfParams:
    """Contention timing constants; sifs < difs keeps handshake gaps safe
    from DIFS-completing contenders."""

    difs: float = 5e-5
    sifs: float = 1e-5
    backoff_slot: float = 2e-5
    cw_min: int = 16
    cw_max: int = 1024
    request_len: float = 2e-4
    feedback_len: float = 1e-4

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "DcfParams":
        return cls(difs=cfg.difs_s, sifs=cfg.sifs_s,
                   backoff_slot=cfg.backoff_slot_s, cw_min=cfg.cw_min,
                   cw_max=cfg.cw_max, request_len=cfg.request_s,
                   feedback_len=cfg.feedback_s)


class Phase(Enum):
    IDLE = "idle"
    SENSING = "sensing"
    BACKOFF = "backoff"
    REQUESTING = "requesting"
    AWAITING_FEEDBACK = "awaiting_feedback"
    TRANSMITTING = "transmitting"


#: Legal phase successors (handshake order).
_PHASE_ORDER = {
    Phase.IDLE: (Phase.SENSING,),
    Phase.SENSING: (Phase.BACKOFF,),
    Phase.BACKOFF: (Phase.BACKOFF, Phase.REQUESTING),
    Phase.REQUESTING: (Phase.AWAITING_FEEDBACK,),
    Phase.AWAITING_FEEDBACK: (Phase.TRANSMITTING, Phase.SENSING, Phase.IDLE),
    Phase.TRANSMITTING: (Phase.IDLE, Phase.SENSING),
}


def draw_backoff(cw: int, rng: np.random.Generator) -> int:
    """Uniform integer in [0, cw-1] from the "backoff" stream."""
    if cw < 1:
        raise ConfigError(f"contention window must be >= 1, got {cw}")
    return int(rng.integers(cw))


def escalate_cw(cw: int, cw_max: int) -> int:
    return min(2 * cw, cw_max)


def cycle_airtime(params: DcfParams, backoff_slots: int, data_s: float,
                  compute_s: float = 0.0) -> float:
    """Airtime of one uncontended access cycle, composed per the handshake:
    difs + backoff + request + sifs + feedback + sifs + data.  The local
    compute runs concurrently with the countdown and only stretches the
    cycle when it outlasts difs + backoff."""
    return (max(params.difs + backoff_slots * params.backoff_slot, compute_s) +
            params.request_len + params.sifs + params.feedback_len +
            params.sifs + data_s)


def resolve_collisions(attempts) -> tuple:
    """RIS-controller arbitration of simultaneous request starts on one
    sub-channel: a unique attempt wins; with several, the earliest request
    start wins and later ones defer; ties at the earliest start all fail.

    `attempts` is a list of (station_id, request_start); returns
    (winner_or_None, losers).
    """
    if not attempts:
        return None, []
    earliest = min(t for _, t in attempts)
    first = [uid for uid, t in attempts if t == earliest]
    if len(first) > 1:
        return None, [uid for uid, _ in attempts]
    winner = first[0]
    return winner, [uid for uid, _ in attempts if uid != winner]


@dataclass
class StationState:
    uid: int
    cw: int
    phase: Phase = Phase.IDLE
    backoff_remaining: int = 0
    chosen: tuple = (0, 0)          # (subchannel == ris, phase rotation id)
    qtable: QTable = None
    rl_state: tuple = (0, (0, 0))
    prev_rate: float = 0.0
    pending_rate: float = 0.0
    pending_config: object = None   # RisConfig produced by the local compute
    compute_ready_at: float = 0.0   # local config compute finishes here
    config_block: int = -1          # fading block of the CSI snapshot used
    session_start: float = 0.0
    dormant: bool = False

    def to_phase(self, new: Phase) -> None:
        if new not in _PHASE_ORDER[self.phase]:
            raise ConfigError(
                f"station {self.uid}: illegal phase change "
                f"{self.phase.value} -> {new.value}")
        self.phase = new


@dataclass
class _Contender:
    station: StationState
    offset: int = 0              # slot index where it joined the idle window
    sense_from: float = None     # receiver-on timestamp; None while frozen


class _Channel:
    def __init__(self, sub: int):
        self.sub = sub
        self.idle = True
        self.anchor = 0.0        # idle-window slot grid origin (after DIFS)
        self.version = 0
        self.roster: dict[int, _Contender] = {}
        self.burst = None        # {"start": t, "members": [uid, ...]}
        self.reserved_until = 0.0   # RIS grant horizon (denial check)


MODE_DATA = "data"
MODE_RESERVE = "reserve"


class ContentionEngine:
    """Runs DCF contention for a set of stations over the sub-channels
    within [t_open, t_close); t_close may be inf (pure distributed mode).

    mode "data": a granted station transmits its data slot.
    mode "reserve": the handshake ends at the grant (request periods of the
    hybrid cases); `on_grant(station, t)` collects winners.
    """

    def __init__(self, cfg: ScenarioConfig, recorder: Recorder,
                 book: ChannelBook, stations, period: str,
                 mode: str = MODE_DATA, local_compute: bool = True,
                 feedback_actor: str = "ris", on_grant=None,
                 rl_updates: bool = True, fixed_block: int = None):
        self.cfg = cfg
        self.rec = recorder
        self.book = book
        self.params = DcfParams.from_config(cfg)
        self.stations = {st.uid: st for st in stations}
        self.period = period
        self.mode = mode
        self.local_compute = local_compute
        self.feedback_actor = feedback_actor
        self.on_grant = on_grant
        self.rl_updates = rl_updates
        # Frame-hosted windows pin the fading block to their frame index
        # (coherence = frame duration); frameless operation tracks the
        # coherence clock instead.
        self.fixed_block = fixed_block
        self.channels = [_Channel(s) for s in range(cfg.subchannels())]
        self.t_close = math.inf
        self.closed = False
        self.local_cost = cfg.local_cost_model()

    def _block(self, t: float) -> int:
        return self.fixed_block if self.fixed_block is not None \
            else self.book.block_at(t)

    # ------------------------------------------------------------------ #

    def open(self, sim: Simulation, t_open: float, t_close: float = math.inf) -> None:
        self.t_close = t_close
        self.closed = False
        for ch in self.channels:
            ch.idle = True
            ch.anchor = t_open + self.params.difs
            ch.version += 1
            ch.roster.clear()
            ch.burst = None
        for st in self.stations.values():
            st.dormant = False
            st.phase = Phase.IDLE
            st.session_start = t_open
            self._new_attempt(sim, st, t_open, fresh_action=True)

    def close(self, t: float) -> None:
        """Shut the window: bill outstanding sensing, freeze everyone."""
        self.closed = True
        for ch in self.channels:
            ch.version += 1
            for c in ch.roster.values():
                if c.sense_from is not None and t > c.sense_from:
                    self.rec.sense(c.sense_from, t - c.sense_from,
                                   f"user:{c.station.uid}",
                                   self.cfg.idle_listen_w, self.period)
            ch.roster.clear()
            ch.burst = None

    # -- station lifecycle ---------------------------------------------- #

    def _rl_rng(self, st: StationState):
        return self.book.streams.stream("rl", st.uid)

    def _backoff_rng(self, st: StationState):
        return self.book.streams.stream("backoff", st.uid)

    def _select_action(self, st: StationState) -> tuple:
        if st.qtable is not None:
            action = st.qtable.select_action(st.rl_state, self._rl_rng(st))
            st.qtable.step_epsilon()
            return action
        sub = int(self._rl_rng(st).integers(self.cfg.subchannels()))
        return (sub, 0)

    def _new_attempt(self, sim: Simulation, st: StationState, t: float,
                     fresh_action: bool) -> None:
        if self.closed or t >= self.t_close:
            st.dormant = True
            return
        if fresh_action:
            st.chosen = self._select_action(st)
            # One configuration compute per attempt, concurrent with the
            # countdown; a defer keeps the already-computed config.
            self._compute_config(st, t)
        if st.phase in (Phase.IDLE, Phase.AWAITING_FEEDBACK, Phase.TRANSMITTING):
            st.to_phase(Phase.SENSING)
        if st.phase == Phase.SENSING:
            st.to_phase(Phase.BACKOFF)
        st.backoff_remaining = draw_backoff(st.cw, self._backoff_rng(st))
        self._join(sim, self.channels[st.chosen[0]], st, t)

    def _compute_config(self, st: StationState, t: float) -> None:
        """Run the local configuration compute starting at time t (billed).

        The computation consumes the CSI snapshot taken when it starts, so the
        produced config belongs to the fading block of t; a compute that
        outlives its block arrives already stale.
        """
        comp = 0.0
        if self.local_compute:
            comp = compute_time(self.local_cost, 1, self.cfg.num_ris,
                                self.cfg.groups_per_ris())
            self.rec.compute(t, comp, f"user:{st.uid}",
                             self.cfg.p_compute_user_w, self.period)
        st.compute_ready_at = t + comp
        st.config_block = self._block(t)
        st.pending_config = self.book.aligned_config(
            st.uid, st.chosen[0], st.config_block, st.chosen[1])
        st.pending_rate = self.book.rate_with_config(
            st.uid, st.chosen[0], st.config_block, st.pending_config)

    def _join(self, sim: Simulation, ch: _Channel, st: StationState,
              t: float) -> None:
        contender = _Contender(station=st)
        if ch.idle:
            ahead = (t + self.params.difs) - ch.anchor
            contender.offset = max(0, math.ceil(
                ahead / self.params.backoff_slot - _SLOT_EPS))
            contender.sense_from = t
        else:
            contender.offset = None
            contender.sense_from = None
        ch.roster[st.uid] = contender
        if ch.idle:
            self._schedule_expiry(sim, ch)

    # -- channel machinery ------------------------------------------------ #

    def _slots_until(self, ch: _Channel, contender: _Contender) -> int:
        return contender.offset + contender.station.backoff_remaining

    def _schedule_expiry(self, sim: Simulation, ch: _Channel) -> None:
        active = [c for c in ch.roster.values() if c.offset is not None]
        if not active:
            return
        slots = min(self._slots_until(ch, c) for c in active)
        t = ch.anchor + slots * self.params.backoff_slot
        if t >= self.t_close:
            return
        # The same (channel, version) may get several expiry events as
        # joiners arrive; stale or non-minimal ones drop in the handler.
        sim.schedule(max(t, sim.clock), "dcf_expiry", actor=f"subch:{ch.sub}",
                     fn=self._on_expiry, payload=(ch.sub, ch.version))

    def _go_idle(self, sim: Simulation, ch: _Channel, t: float) -> None:
        ch.idle = True
        ch.anchor = t + self.params.difs
        ch.version += 1
        ch.burst = None
        for c in ch.roster.values():
            c.offset = 0
            c.sense_from = t
        self._schedule_expiry(sim, ch)

    def _go_busy(self, sim: Simulation, ch: _Channel, t: float) -> None:
        elapsed = max(0, math.floor(
            (t - ch.anchor) / self.params.backoff_slot + _SLOT_EPS))
        for c in ch.roster.values():
            if c.offset is None:
                continue
            used = min(c.station.backoff_remaining, max(0, elapsed - c.offset))
            c.station.backoff_remaining -= used
            c.offset = None
            if c.sense_from is not None and t > c.sense_from:
                self.rec.sense(c.sense_from, t - c.sense_from,
                               f"user:{c.station.uid}",
                               self.cfg.idle_listen_w, self.period)
            c.sense_from = None
        ch.idle = False
        ch.version += 1

    # -- event handlers ---------------------------------------------------- #

    def _on_expiry(self, sim: Simulation, event) -> None:
        sub, version = event.payload
        ch = self.channels[sub]
        if self.closed or version != ch.version or not ch.idle:
            return
        t = sim.clock
        elapsed = round((t - ch.anchor) / self.params.backoff_slot)
        expiring = [c for c in ch.roster.values()
                    if c.offset is not None and self._slots_until(ch, c) == elapsed]
        if not expiring:
            return
        for c in expiring:
            st = c.station
            if c.sense_from is not None and t > c.sense_from:
                self.rec.sense(c.sense_from, t - c.sense_from, f"user:{st.uid}",
                               self.cfg.idle_listen_w, self.period)
            del ch.roster[st.uid]
            st.backoff_remaining = 0
            # Request when both the countdown and the concurrent compute are
            # done; the compute usually hides under the backoff.
            sim.schedule(max(t, st.compute_ready_at), "dcf_req_start",
                         actor=f"user:{st.uid}", fn=self._on_req_start,
                         payload=st.uid)
        self._schedule_expiry(sim, ch)

    def _on_req_start(self, sim: Simulation, event) -> None:
        st = self.stations[event.payload]
        ch = self.channels[st.chosen[0]]
        t = sim.clock
        tail = (self.params.request_len + self.params.sifs +
                self.params.feedback_len)
        if self.mode == MODE_DATA:
            tail += self.params.sifs + self.cfg.data_slot_s
        if self.closed or t + tail > self.t_close:
            st.dormant = True
            return
        if self.local_compute and st.config_block != self._block(t):
            # The fading block moved on since the CSI snapshot: refresh the
            # configuration before requesting.  A fast inference absorbs this
            # in a fraction of a slot; a slow iterative search can chase the
            # channel for several blocks.
            self._compute_config(st, t)
            sim.schedule(st.compute_ready_at, "dcf_req_start",
                         actor=f"user:{st.uid}", fn=self._on_req_start,
                         payload=st.uid)
            return
        if not ch.idle:
            if ch.burst is not None and ch.burst["start"] == t:
                # Started in the same instant as the burst: nobody sensed
                # anybody, the requests overlap.
                ch.burst["members"].append(st.uid)
                st.to_phase(Phase.REQUESTING)
            else:
                # Channel seized while this station was computing: defer,
                # keep the contention window (not a collision).
                self._new_attempt(sim, st, t, fresh_action=False)
            return
        self._go_busy(sim, ch, t)
        ch.burst = {"start": t, "members": [st.uid]}
        st.to_phase(Phase.REQUESTING)
        sim.schedule(t + self.params.request_len, "dcf_req_end",
                     actor=f"subch:{ch.sub}", fn=self._on_req_end,
                     payload=ch.sub)

    def _on_req_end(self, sim: Simulation, event) -> None:
        ch = self.channels[event.payload]
        if ch.burst is None:
            return
        t = sim.clock
        members = ch.burst["members"]
        start = ch.burst["start"]
        for uid in members:
            self.rec.tx(start, self.params.request_len, f"user:{uid}",
                        self.cfg.tx_power_w(), self.period)
        winner, _losers = resolve_collisions([(uid, start) for uid in members])
        if winner is None:
            self.rec.collision(t, ch.sub, members, self.period)
            for uid in members:
                st = self.stations[uid]
                st.cw = escalate_cw(st.cw, self.params.cw_max)
                st.to_phase(Phase.AWAITING_FEEDBACK)
                sim.schedule(t + self.params.sifs + self.params.feedback_len,
                             "dcf_rejoin", actor=f"user:{uid}",
                             fn=self._on_rejoin, payload=uid)
            self._go_idle(sim, ch, t)
            return
        st = self.stations[winner]
        st.to_phase(Phase.AWAITING_FEEDBACK)
        if t < ch.reserved_until:
            # RIS already granted elsewhere: denial feedback.
            sim.schedule(t + self.params.sifs + self.params.feedback_len,
                         "dcf_denied", actor=f"user:{winner}",
                         fn=self._on_denied, payload=(winner, ch.sub))
            return
        ch.reserved_until = t + self.params.sifs + self.params.feedback_len
        if self.mode == MODE_DATA:
            ch.reserved_until += self.params.sifs + self.cfg.data_slot_s
        sim.schedule(t + self.params.sifs + self.params.feedback_len,
                     "dcf_grant", actor=f"user:{winner}", fn=self._on_grant,
                     payload=(winner, ch.sub))

    def _feedback_records(self, t_end: float, uid: int, sub: int) -> None:
        fb = self.params.feedback_len
        self.rec.tx(t_end - fb, fb, f"{self.feedback_actor}:{sub}",
                    self.cfg.feedback_tx_w, self.period)
        self.rec.sense(t_end - fb - self.params.sifs,
                       self.params.sifs + fb, f"user:{uid}",
                       self.cfg.idle_listen_w, self.period)

    def _on_denied(self, sim: Simulation, event) -> None:
        uid, sub = event.payload
        st = self.stations[uid]
        t = sim.clock
        self._feedback_records(t, uid, sub)
        if self.cfg.deny_doubles_cw:
            st.cw = escalate_cw(st.cw, self.params.cw_max)
        self._rl_outcome(st, collided=True)
        self._go_idle(sim, self.channels[sub], t)
        self._new_attempt(sim, st, t, fresh_action=True)

    def _on_grant(self, sim: Simulation, event) -> None:
        uid, sub = event.payload
        st = self.stations[uid]
        ch = self.channels[sub]
        t = sim.clock
        self._feedback_records(t, uid, sub)
        if self.mode == MODE_RESERVE:
            st.dormant = True
            st.to_phase(Phase.IDLE)
            st.cw = self.params.cw_min
            if self.rl_updates and st.qtable is not None:
                self._rl_outcome(st, collided=False, new_rate=st.pending_rate)
            self._go_idle(sim, ch, t)
            if self.on_grant is not None:
                self.on_grant(st, t)
            return
        st.to_phase(Phase.TRANSMITTING)
        sim.schedule(t + self.params.sifs + self.cfg.data_slot_s,
                     "dcf_data_end", actor=f"user:{uid}", fn=self._on_data_end,
                     payload=(uid, sub))

    def _on_data_end(self, sim: Simulation, event) -> None:
        uid, sub = event.payload
        st = self.stations[uid]
        ch = self.channels[sub]
        t = sim.clock
        slot = self.cfg.data_slot_s
        tx_block = self._block(t - slot)
        if st.pending_config is not None and tx_block != st.config_block:
            # The block flipped between the grant and the slot: the stale
            # config earns whatever the new channel yields.
            st.pending_rate = self.book.rate_with_config(
                uid, sub, tx_block, st.pending_config)
        bits = st.pending_rate * slot
        self.rec.tx(t - slot, slot, f"user:{uid}", self.cfg.tx_power_w(),
                    self.period, bits=bits, user=uid, rate=st.pending_rate,
                    subch=sub)
        self.rec.delay(uid, t - st.session_start)
        self._rl_outcome(st, collided=False, new_rate=st.pending_rate)
        st.cw = self.params.cw_min
        st.to_phase(Phase.IDLE)
        st.session_start = t
        self._go_idle(sim, ch, t)
        self._new_attempt(sim, st, t, fresh_action=True)

    def _on_rejoin(self, sim: Simulation, event) -> None:
        st = self.stations[event.payload]
        t = sim.clock
        # Timeout listening for the feedback that never came.
        self.rec.sense(t - self.params.sifs - self.params.feedback_len,
                       self.params.sifs + self.params.feedback_len,
                       f"user:{st.uid}", self.cfg.idle_listen_w, self.period)
        self._rl_outcome(st, collided=True)
        st.to_phase(Phase.SENSING)
        self._new_attempt(sim, st, t, fresh_action=True)

    # -- reinforcement learning ------------------------------------------- #

    def _rl_outcome(self, st: StationState, collided: bool,
                    new_rate: float = None) -> None:
        if not self.rl_updates or st.qtable is None:
            return
        rate = st.prev_rate if collided or new_rate is None else new_rate
        r = reward(st.prev_rate, rate, collided)
        pair = (st.chosen[0], st.chosen[0])  # (subchannel, RIS): 1:1 mapping
        next_state = (rate_bucket(rate, self.cfg.rate_buckets), pair)
        st.qtable.update(st.rl_state, st.chosen, r, next_state)
        st.rl_state = next_state
        if not collided and new_rate is not None:
            st.prev_rate = new_rate


def build_stations(cfg: ScenarioConfig, users) -> list:
    """Stations with per-user Q-tables in AI mode (actions: sub-channel/RIS
    pair times the phase-rotation codebook), plain uniform pickers otherwise."""
    stations = []
    actions = [(sub, rot) for sub in range(cfg.subchannels())
               for rot in range(2 ** cfg.ris_bits)]
    for uid in users:
        q = None
        if cfg.ai:
            q = QTable(actions=actions, learning_rate=cfg.learning_rate,
                       discount=cfg.discount, epsilon=cfg.epsilon,
                       epsilon_min=cfg.epsilon_min,
                       epsilon_decay=cfg.epsilon_decay)
        stations.append(StationState(uid=uid, cw=cfg.cw_min, qtable=q))
    return stations


class DistributedMac:
    """Pure distributed operation: every user contends from t=0 onward."""

    def __init__(self, cfg: ScenarioConfig, recorder: Recorder):
        self.cfg = cfg
        self.rec = recorder

    def start(self, sim: Simulation) -> None:
        book = ChannelBook(self.cfg, sim.rng)
        stations = build_stations(self.cfg, range(self.cfg.K))
        self.engine = ContentionEngine(self.cfg, self.rec, book, stations,
                                       period="competing")
        self.engine.open(sim, 0.0)
